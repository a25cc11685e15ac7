#pragma once

#include <liverkg/term.hpp>

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace liverkg::rdf {

// In-memory RDF graph with set semantics. Three nested indexes (SPO, POS,
// OSP) answer every bound/unbound pattern shape without a scan. The class
// does no locking: concurrent readers are fine, writers must be serialized
// by the owner.
class Graph {
public:
    Graph() = default;

    // Returns true iff the triple was not already present.
    bool insert(const Triple& t) {
        auto& objects = spo_[t.subject][t.predicate];
        if (!objects.insert(t.object).second) return false;
        pos_[t.predicate][t.object].insert(t.subject);
        osp_[t.object][t.subject].insert(t.predicate);
        ++size_;
        return true;
    }

    bool insert(Iri s, Iri p, Term o) { return insert(Triple{std::move(s), std::move(p), std::move(o)}); }

    template <typename Range>
    std::size_t insert_all(const Range& triples) {
        std::size_t added = 0;
        for (const auto& t : triples) added += insert(t) ? 1 : 0;
        return added;
    }

    bool remove(const Triple& t) {
        auto s_it = spo_.find(t.subject);
        if (s_it == spo_.end()) return false;
        auto p_it = s_it->second.find(t.predicate);
        if (p_it == s_it->second.end() || p_it->second.erase(t.object) == 0) return false;
        if (p_it->second.empty()) s_it->second.erase(p_it);
        if (s_it->second.empty()) spo_.erase(s_it);

        erase_nested(pos_, t.predicate, t.object, t.subject);
        erase_nested(osp_, t.object, t.subject, t.predicate);
        --size_;
        return true;
    }

    bool contains(const Triple& t) const {
        auto s_it = spo_.find(t.subject);
        if (s_it == spo_.end()) return false;
        auto p_it = s_it->second.find(t.predicate);
        return p_it != s_it->second.end() && p_it->second.count(t.object) > 0;
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    // Triples agreeing with every bound position, in ascending (s, p, o) order.
    std::vector<Triple> match(const std::optional<Iri>& s = std::nullopt, const std::optional<Iri>& p = std::nullopt,
                              const std::optional<Term>& o = std::nullopt) const {
        std::vector<Triple> out;
        bool sorted = true;
        if (s) {
            auto s_it = spo_.find(*s);
            if (s_it == spo_.end()) return out;
            if (p) {
                auto p_it = s_it->second.find(*p);
                if (p_it == s_it->second.end()) return out;
                if (o) {
                    if (p_it->second.count(*o)) out.push_back({*s, *p, *o});
                } else {
                    for (const auto& obj : p_it->second) out.push_back({*s, *p, obj});
                }
            } else if (o) {
                auto o_it = osp_.find(*o);
                if (o_it == osp_.end()) return out;
                auto os_it = o_it->second.find(*s);
                if (os_it == o_it->second.end()) return out;
                for (const auto& pred : os_it->second) out.push_back({*s, pred, *o});
            } else {
                for (const auto& [pred, objs] : s_it->second)
                    for (const auto& obj : objs) out.push_back({*s, pred, obj});
            }
        } else if (p) {
            auto p_it = pos_.find(*p);
            if (p_it == pos_.end()) return out;
            if (o) {
                auto o_it = p_it->second.find(*o);
                if (o_it == p_it->second.end()) return out;
                for (const auto& subj : o_it->second) out.push_back({subj, *p, *o});
            } else {
                for (const auto& [obj, subjs] : p_it->second)
                    for (const auto& subj : subjs) out.push_back({subj, *p, obj});
                sorted = false;
            }
        } else if (o) {
            auto o_it = osp_.find(*o);
            if (o_it == osp_.end()) return out;
            for (const auto& [subj, preds] : o_it->second)
                for (const auto& pred : preds) out.push_back({subj, pred, *o});
        } else {
            out.reserve(size_);
            for (const auto& [subj, po] : spo_)
                for (const auto& [pred, objs] : po)
                    for (const auto& obj : objs) out.push_back({subj, pred, obj});
        }
        if (!sorted) std::sort(out.begin(), out.end());
        return out;
    }

    // Number of matches without materializing them; used for join ordering.
    std::size_t count(const std::optional<Iri>& s = std::nullopt, const std::optional<Iri>& p = std::nullopt,
                      const std::optional<Term>& o = std::nullopt) const {
        if (!s && !p && !o) return size_;
        if (s && !p && !o) {
            auto it = spo_.find(*s);
            if (it == spo_.end()) return 0;
            std::size_t n = 0;
            for (const auto& [pred, objs] : it->second) n += objs.size();
            return n;
        }
        if (!s && p && !o) {
            auto it = pos_.find(*p);
            if (it == pos_.end()) return 0;
            std::size_t n = 0;
            for (const auto& [obj, subjs] : it->second) n += subjs.size();
            return n;
        }
        return match(s, p, o).size();
    }

    std::vector<Triple> triples() const { return match(); }

    std::vector<Iri> subjects() const {
        std::vector<Iri> out;
        out.reserve(spo_.size());
        for (const auto& entry : spo_) out.push_back(entry.first);
        return out;
    }

    friend bool operator==(const Graph& a, const Graph& b) { return a.size_ == b.size_ && a.spo_ == b.spo_; }

private:
    template <typename Outer, typename K1, typename K2, typename V>
    static void erase_nested(Outer& index, const K1& k1, const K2& k2, const V& v) {
        auto a = index.find(k1);
        if (a == index.end()) return;
        auto b = a->second.find(k2);
        if (b == a->second.end()) return;
        b->second.erase(v);
        if (b->second.empty()) a->second.erase(b);
        if (a->second.empty()) index.erase(a);
    }

    std::map<Iri, std::map<Iri, std::set<Term>>> spo_;
    std::map<Iri, std::map<Term, std::set<Iri>>> pos_;
    std::map<Term, std::map<Iri, std::set<Iri>>> osp_;
    std::size_t size_ = 0;
};

}  // namespace liverkg::rdf
