#pragma once

// JSON-over-HTTP facade. `Service::handle` is a plain router over
// (method, path, body) so it can be driven without sockets; `serve` binds
// it to an httplib server.
//
// State lives in memory and, when a data directory is configured, is
// written through on every change:
//   <data>/graphs/index.json, <data>/graphs/<id>.nt
//   <data>/rules.swl
//   <data>/sessions/index.json, <data>/sessions/<id>.json

#include <liverkg/dss.hpp>
#include <liverkg/ingest.hpp>
#include <liverkg/knowledge.hpp>
#include <liverkg/ntriples.hpp>
#include <liverkg/ontology.hpp>
#include <liverkg/reasoner.hpp>
#include <liverkg/sparql.hpp>
#include <liverkg/stream.hpp>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>

namespace liverkg::service {

using Json = nlohmann::json;
namespace fs = std::filesystem;

enum class ErrorCode { BadRequest, NotFound, Conflict, PreconditionFailed, Internal };

inline std::string_view code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::BadRequest: return "bad_request";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::Conflict: return "conflict";
        case ErrorCode::PreconditionFailed: return "precondition_failed";
        case ErrorCode::Internal: return "internal";
    }
    return "internal";
}

inline int http_status(ErrorCode c) {
    switch (c) {
        case ErrorCode::BadRequest: return 400;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Conflict: return 409;
        case ErrorCode::PreconditionFailed: return 412;
        case ErrorCode::Internal: return 500;
    }
    return 500;
}

class ApiError : public std::runtime_error {
public:
    ApiError(ErrorCode code, const std::string& message, Json detail = nullptr)
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}
    ErrorCode code() const noexcept { return code_; }
    const Json& detail() const noexcept { return detail_; }
    Json to_json() const {
        Json j = {{"error", {{"code", code_name(code_)}, {"message", what()}}}};
        if (!detail_.is_null()) j["error"]["detail"] = detail_;
        return j;
    }

private:
    ErrorCode code_;
    Json detail_;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

struct Config {
    std::string bind = "127.0.0.1:8080";
    std::string data_dir;  // empty: memory only
    std::string textgen_url;
    std::string textgen_key;

    static Config from_env() {
        Config c;
        auto get = [](const char* k) -> std::string {
            const char* v = std::getenv(k);
            return v ? v : "";
        };
        if (auto v = get("BIND_ADDR"); !v.empty()) c.bind = v;
        c.data_dir = get("DATA_DIR");
        c.textgen_url = get("TEXTGEN_URL");
        c.textgen_key = get("TEXTGEN_KEY");
        return c;
    }
};

// 64-bit FNV-1a over the canonical serialization, as 16 hex digits.
inline std::string graph_id(const rdf::Graph& g) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : rdf::serialize_ntriples(g)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Client for an external text-generation endpoint: POSTs {"prompt": text}
// and expects {"text": ...} back.
inline dss::TextPostProcessor textgen_client(const std::string& url, const std::string& key) {
    if (url.empty()) return {};
    auto scheme_end = url.find("://");
    auto path_at = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    std::string origin = path_at == std::string::npos ? url : url.substr(0, path_at);
    std::string path = path_at == std::string::npos ? "/" : url.substr(path_at);
    return [origin, path, key](const std::string& text) -> std::string {
        httplib::Client cli(origin);
        cli.set_connection_timeout(5);
        cli.set_read_timeout(20);
        httplib::Headers headers;
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
        auto res = cli.Post(path, headers, Json{{"prompt", text}}.dump(), "application/json");
        if (!res || res->status != 200) throw Error("text generation request failed");
        return Json::parse(res->body).at("text").get<std::string>();
    };
}

namespace detail {

inline std::vector<std::string> split_path(std::string_view path) {
    if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') ++i;
        auto j = path.find('/', i);
        if (j == std::string_view::npos) j = path.size();
        if (j > i) out.emplace_back(path.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write to a sibling temp file, then rename over the target.
inline void write_file(const fs::path& p, const std::string& content) {
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, p);
}

inline Json parse_json(const std::string& body) {
    try {
        return Json::parse(body);
    } catch (const Json::exception& e) {
        throw ApiError(ErrorCode::BadRequest, std::string("invalid JSON body: ") + e.what());
    }
}

inline std::string require_string(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_string())
        throw ApiError(ErrorCode::BadRequest, std::string("missing string field '") + key + "'");
    return j.at(key).get<std::string>();
}

}  // namespace detail

class Service {
public:
    explicit Service(Config config = {})
        : config_(std::move(config)), textgen_(textgen_client(config_.textgen_url, config_.textgen_key)) {
        if (!config_.data_dir.empty()) open_store();
    }

    const Config& config() const { return config_; }

    Response handle(const std::string& method, const std::string& path, const std::string& body) {
        try {
            return route(method, detail::split_path(path), body);
        } catch (const ApiError& e) {
            return error(e);
        } catch (const ParseError& e) {
            return error(ApiError(ErrorCode::BadRequest, e.what(), Json{{"line", e.line()}, {"column", e.column()}}));
        } catch (const NotFoundError& e) {
            return error(ApiError(ErrorCode::NotFound, e.what()));
        } catch (const ConflictError& e) {
            return error(ApiError(ErrorCode::Conflict, e.what()));
        } catch (const PreconditionError& e) {
            return error(ApiError(ErrorCode::PreconditionFailed, e.what()));
        } catch (const DataError& e) {
            return error(ApiError(ErrorCode::BadRequest, e.what()));
        } catch (const EvaluationError& e) {
            return error(ApiError(ErrorCode::BadRequest, e.what()));
        } catch (const Json::exception& e) {
            return error(ApiError(ErrorCode::BadRequest, std::string("malformed request: ") + e.what()));
        } catch (const std::exception&) {
            return error(ApiError(ErrorCode::Internal, "internal error"));
        }
    }

    // Direct accessors used by the CLI and tests.
    std::string add_graph(rdf::Graph g) {
        auto id = graph_id(g);
        std::unique_lock lock(graphs_mu_);
        if (graphs_.count(id)) return id;
        if (store_) detail::write_file(dir("graphs") / (id + ".nt"), rdf::serialize_ntriples(g));
        graphs_.emplace(id, std::make_shared<const rdf::Graph>(std::move(g)));
        if (store_) write_graph_index_locked();
        return id;
    }

    std::shared_ptr<const rdf::Graph> graph(const std::string& id) const {
        std::shared_lock lock(graphs_mu_);
        auto it = graphs_.find(id);
        if (it == graphs_.end()) throw ApiError(ErrorCode::NotFound, "no graph " + id);
        return it->second;
    }

    std::vector<std::string> graph_ids() const {
        std::shared_lock lock(graphs_mu_);
        std::vector<std::string> out;
        for (const auto& [id, g] : graphs_) out.push_back(id);
        return out;
    }

    std::vector<rules::Rule> active_rules() const { return engine_.active(); }

    std::vector<std::string> session_ids() const {
        std::lock_guard lock(sessions_mu_);
        std::vector<std::string> out;
        for (const auto& [id, s] : sessions_) out.push_back(id);
        return out;
    }

    dss::Session session(const std::string& id) const {
        auto slot = find_session(id);
        std::lock_guard lock(slot->mu);
        return slot->session;
    }

private:
    struct SessionSlot {
        std::mutex mu;
        dss::Session session;
    };

    // ---- routing ----

    Response route(const std::string& method, const std::vector<std::string>& seg, const std::string& body) {
        auto n = seg.size();
        auto is = [&](std::initializer_list<const char*> parts) {
            if (parts.size() != n) return false;
            std::size_t i = 0;
            for (const char* p : parts) {
                if (*p != '*' && seg[i] != p) return false;
                ++i;
            }
            return true;
        };
        if (method == "GET" && is({"health"})) return ok({{"status", "ok"}});
        if (method == "POST" && is({"datasets"})) return post_dataset(body);
        if (method == "POST" && is({"graphs"})) return post_graph(body);
        if (method == "GET" && is({"graphs"})) return ok({{"graphs", graph_ids()}});
        if (method == "GET" && is({"graphs", "*"})) return {200, "application/n-triples", rdf::serialize_ntriples(*graph(seg[1]))};
        if (method == "POST" && is({"rules"})) return post_rules(body);
        if (method == "GET" && is({"rules"})) return get_rules();
        if (method == "DELETE" && is({"rules", "*"})) return delete_rule(seg[1]);
        if (method == "POST" && is({"query"})) return post_query(body);
        if (method == "POST" && is({"infer"})) return post_infer(body);
        if (method == "GET" && is({"metrics", "*"})) return get_metrics(seg[1]);
        if (method == "POST" && is({"stream", "bench"})) return post_bench(body);
        if (method == "POST" && is({"sessions"})) return post_session();
        if (n >= 2 && seg[0] == "sessions") {
            if (method == "GET" && n == 2) return with_session(seg[1], [](dss::Session& s) { return dss::to_json(s); });
            if (method == "POST" && is({"sessions", "*", "labs"})) return post_labs(seg[1], body);
            if (method == "GET" && is({"sessions", "*", "diagnosis"})) return get_diagnosis(seg[1]);
            if (method == "POST" && is({"sessions", "*", "report"})) return post_report(seg[1], body);
            if (method == "GET" && is({"sessions", "*", "plan"})) return get_plan(seg[1]);
            if (method == "POST" && is({"sessions", "*", "followup"})) return post_followup(seg[1], body);
            if (method == "GET" && is({"sessions", "*", "explanation"})) return get_explanation(seg[1]);
        }
        throw ApiError(ErrorCode::NotFound, "no route for " + method + " /" + join(seg));
    }

    static std::string join(const std::vector<std::string>& seg) {
        std::string out;
        for (const auto& s : seg) out += (out.empty() ? "" : "/") + s;
        return out;
    }

    static Response ok(const Json& j, int status = 200) { return {status, "application/json", j.dump()}; }
    static Response error(const ApiError& e) { return {http_status(e.code()), "application/json", e.to_json().dump()}; }

    // ---- datasets and graphs ----

    Response post_dataset(const std::string& body) {
        auto records = ingest::load_encoded(body);
        auto g = ingest::records_to_graph(records);
        auto size = g.size();
        auto id = add_graph(std::move(g));
        return ok({{"id", id}, {"records", records.size()}, {"triples", size}}, 201);
    }

    Response post_graph(const std::string& body) {
        auto g = rdf::parse_ntriples(body);
        auto size = g.size();
        auto id = add_graph(std::move(g));
        return ok({{"id", id}, {"triples", size}}, 201);
    }

    // ---- rules ----

    Response post_rules(const std::string& body) {
        auto parsed = rules::parse_rule_file(body);
        if (parsed.empty()) throw ApiError(ErrorCode::BadRequest, "no rules in request body");
        std::lock_guard lock(rules_mu_);
        Json out = Json::array();
        for (auto& r : parsed) {
            auto name = r.name;
            double ms = engine_.deploy(std::move(r));
            out.push_back({{"name", name}, {"deployment_ms", ms}});
        }
        persist_rules_locked();
        return ok({{"deployed", out}}, 201);
    }

    Response get_rules() const {
        Json out = Json::array();
        for (const auto& r : engine_.active()) out.push_back({{"name", r.name}, {"text", rules::serialize_rule(r)}});
        return ok({{"rules", out}});
    }

    Response delete_rule(const std::string& name) {
        std::lock_guard lock(rules_mu_);
        if (!engine_.undeploy(name)) throw ApiError(ErrorCode::NotFound, "no deployed rule " + name);
        persist_rules_locked();
        return ok({{"removed", name}});
    }

    // Rules for /infer: inline text, a named built-in set, or the deployed set.
    std::vector<rules::Rule> rules_for(const Json& req) const {
        if (req.contains("rules")) return rules::parse_rule_file(detail::require_string(req, "rules"));
        auto set = req.value("ruleset", std::string("deployed"));
        if (set == "deployed") return engine_.active();
        if (set == "diagnostic") return knowledge::load_diagnostic_rules();
        if (set == "guidelines") return knowledge::load_guideline_rules();
        throw ApiError(ErrorCode::BadRequest, "unknown ruleset " + set);
    }

    // ---- query, inference, metrics, bench ----

    Response post_query(const std::string& body) {
        auto req = detail::parse_json(body);
        auto g = graph(detail::require_string(req, "graph"));
        auto rs = sparql::query(detail::require_string(req, "query"), *g);
        if (req.value("format", std::string("json")) == "tsv") return {200, "text/tab-separated-values", sparql::to_tsv(rs)};
        return ok(sparql::to_json(rs));
    }

    Response post_infer(const std::string& body) {
        auto req = detail::parse_json(body);
        auto g = graph(detail::require_string(req, "graph"));
        auto rules = rules_for(req);
        auto result = rules::infer(*g, rules, Vocabulary::clinical());
        Json proofs = Json::array();
        for (const auto& p : result.proofs) proofs.push_back(dss::detail::step_to_json(p));
        return ok({{"derived", rdf::serialize_ntriples(result.derived)},
                   {"count", result.derived.size()},
                   {"iterations", result.iterations},
                   {"proofs", proofs}});
    }

    Response get_metrics(const std::string& id) {
        auto g = graph(id);
        auto schema = ontology::load_schema(knowledge::liver_schema);
        auto j = ontology::to_json(ontology::compute_metrics(schema, *g));
        Json violations = Json::array();
        for (const auto& v : ontology::check_consistency(schema, *g)) violations.push_back(ontology::to_json(v));
        j["violations"] = violations;
        return ok(j);
    }

    Response post_bench(const std::string& body) {
        auto req = detail::parse_json(body);
        auto g = graph(detail::require_string(req, "graph"));
        auto sweep = req.value("sweep", std::string("batch"));
        std::vector<stream::SweepPoint> grid;
        if (sweep == "batch") grid = stream::sweep_grid(stream::SweepKind::BatchSize);
        else if (sweep == "rules") grid = stream::sweep_grid(stream::SweepKind::RuleCount);
        else if (sweep == "custom") {
            if (!req.contains("points") || !req.at("points").is_array() || req.at("points").empty())
                throw ApiError(ErrorCode::BadRequest, "custom sweep needs a non-empty 'points' array");
            for (const auto& p : req.at("points"))
                grid.push_back({p.at("batch_size").get<std::size_t>(), p.at("rule_count").get<std::size_t>()});
            for (const auto& p : grid)
                if (p.batch_size == 0) throw ApiError(ErrorCode::BadRequest, "batch_size must be at least 1");
        } else {
            throw ApiError(ErrorCode::BadRequest, "sweep must be batch, rules or custom");
        }
        auto repeats = req.value("repeats", std::size_t{3});
        if (repeats == 0 || repeats > 50) throw ApiError(ErrorCode::BadRequest, "repeats must be in 1..50");
        auto rows = stream::run_sweep(stream::group_records(*g), knowledge::load_diagnostic_rules(), grid, repeats);
        Json out = Json::array();
        for (const auto& r : rows)
            out.push_back({{"batch_size", r.batch_size}, {"rule_count", r.rule_count}, {"mean_ms", r.mean_ms}, {"runs_ms", r.runs}});
        return ok({{"rows", out}, {"csv", stream::timing_csv(rows)}});
    }

    // ---- sessions ----

    std::shared_ptr<SessionSlot> find_session(const std::string& id) const {
        std::lock_guard lock(sessions_mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw ApiError(ErrorCode::NotFound, "no session " + id);
        return it->second;
    }

    // Runs `f` under the session's lock and persists the result.
    template <class F>
    Response with_session(const std::string& id, F&& f, int status = 200) {
        auto slot = find_session(id);
        std::lock_guard lock(slot->mu);
        Json out = f(slot->session);
        persist_session(slot->session);
        return ok(out, status);
    }

    Response post_session() {
        auto slot = std::make_shared<SessionSlot>();
        {
            std::lock_guard lock(sessions_mu_);
            slot->session.id = "s" + std::to_string(++session_counter_);
            sessions_.emplace(slot->session.id, slot);
            persist_session_index_locked();
        }
        std::lock_guard lock(slot->mu);
        persist_session(slot->session);
        return ok({{"id", slot->session.id}, {"state", dss::name(slot->session.state)}}, 201);
    }

    Response post_labs(const std::string& id, const std::string& body) {
        find_session(id);
        auto record = dss::record_from_json(detail::parse_json(body));
        return with_session(id, [&](dss::Session& s) {
            s.enter_labs(record);
            return Json{{"id", s.id}, {"state", dss::name(s.state)}};
        });
    }

    Response get_diagnosis(const std::string& id) {
        return with_session(id, [&](dss::Session& s) {
            if (s.state == dss::State::LabsEntered) s.run_diagnosis(knowledge::load_diagnostic_rules());
            if (!s.diagnosis) throw PreconditionError("session has no lab values yet");
            auto j = dss::to_json(*s.diagnosis);
            j["tests"] = dss::to_json(s.tests);
            j["state"] = dss::name(s.state);
            return j;
        });
    }

    Response post_report(const std::string& id, const std::string& body) {
        return with_session(id, [&](dss::Session& s) {
            const auto& facts = s.ingest_report(body);
            return Json{{"facts", dss::to_json(facts)},
                        {"recognized", s.report->recognized},
                        {"ignored", s.report->ignored},
                        {"state", dss::name(s.state)}};
        });
    }

    Response get_plan(const std::string& id) {
        return with_session(id, [&](dss::Session& s) {
            if (s.state == dss::State::ReportIngested) s.make_plan();
            if (!s.plan) throw PreconditionError("no report has been ingested for this session");
            auto j = dss::to_json(*s.plan);
            j["state"] = dss::name(s.state);
            return j;
        });
    }

    Response post_followup(const std::string& id, const std::string& body) {
        return with_session(id, [&](dss::Session& s) { return dss::to_json(s.assess(body)); });
    }

    Response get_explanation(const std::string& id) {
        return with_session(id, [&](dss::Session& s) {
            if (s.state == dss::State::LabsEntered) s.run_diagnosis(knowledge::load_diagnostic_rules());
            return Json{{"text", dss::explain_session(s, textgen_)}, {"state", dss::name(s.state)}};
        });
    }

    // ---- persistence ----

    fs::path dir(const char* sub) const { return fs::path(config_.data_dir) / sub; }

    void open_store() {
        try {
            fs::create_directories(dir("graphs"));
            fs::create_directories(dir("sessions"));
            auto probe = fs::path(config_.data_dir) / ".write-probe";
            detail::write_file(probe, "");
            fs::remove(probe);
        } catch (const std::exception& e) {
            throw Error("data directory " + config_.data_dir + " is not writable: " + e.what());
        }
        store_ = true;
        load_store();
        {
            std::unique_lock lock(graphs_mu_);
            write_graph_index_locked();
        }
        {
            std::lock_guard lock(sessions_mu_);
            persist_session_index_locked();
        }
        std::lock_guard lock(rules_mu_);
        persist_rules_locked();
    }

    void load_store() {
        auto gindex = dir("graphs") / "index.json";
        if (fs::exists(gindex)) {
            for (const auto& id : Json::parse(detail::read_file(gindex)).get<std::vector<std::string>>()) {
                auto g = rdf::parse_ntriples(detail::read_file(dir("graphs") / (id + ".nt")));
                if (graph_id(g) != id) throw Error("graph file " + id + ".nt does not match its id");
                graphs_.emplace(id, std::make_shared<const rdf::Graph>(std::move(g)));
            }
        }
        auto rules_file = fs::path(config_.data_dir) / "rules.swl";
        if (fs::exists(rules_file))
            for (auto& r : rules::parse_rule_file(detail::read_file(rules_file))) engine_.deploy(std::move(r));
        auto sindex = dir("sessions") / "index.json";
        if (fs::exists(sindex)) {
            auto idx = Json::parse(detail::read_file(sindex));
            session_counter_ = idx.at("counter").get<std::uint64_t>();
            for (const auto& id : idx.at("sessions").get<std::vector<std::string>>()) {
                auto slot = std::make_shared<SessionSlot>();
                slot->session = dss::session_from_json(Json::parse(detail::read_file(dir("sessions") / (id + ".json"))));
                sessions_.emplace(id, slot);
            }
        }
    }

    void write_graph_index_locked() {
        Json ids = Json::array();
        for (const auto& [id, g] : graphs_) ids.push_back(id);
        detail::write_file(dir("graphs") / "index.json", ids.dump());
    }

    void persist_rules_locked() {
        if (store_)
            detail::write_file(fs::path(config_.data_dir) / "rules.swl", rules::serialize_rule_file(engine_.active()));
    }

    void persist_session_index_locked() {
        if (!store_) return;
        Json ids = Json::array();
        for (const auto& [id, s] : sessions_) ids.push_back(id);
        detail::write_file(dir("sessions") / "index.json", Json{{"counter", session_counter_}, {"sessions", ids}}.dump());
    }

    void persist_session(const dss::Session& s) {
        if (store_) detail::write_file(dir("sessions") / (s.id + ".json"), dss::to_json(s).dump(1));
    }

    Config config_;
    dss::TextPostProcessor textgen_;
    bool store_ = false;

    mutable std::shared_mutex graphs_mu_;
    std::map<std::string, std::shared_ptr<const rdf::Graph>> graphs_;

    std::mutex rules_mu_;  // serializes deploys with their persistence
    stream::Engine engine_;

    mutable std::mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
    std::uint64_t session_counter_ = 0;
};

// ---- HTTP binding ----

inline void bind_routes(httplib::Server& server, Service& svc) {
    auto handler = [&svc](const httplib::Request& req, httplib::Response& res) {
        auto r = svc.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Delete(".*", handler);
}

inline std::pair<std::string, int> split_bind(const std::string& bind) {
    auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw DataError("bind address must be host:port");
    auto host = bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
        throw DataError("bad port in bind address " + bind);
    }
    if (port < 0 || port > 65535) throw DataError("bad port in bind address " + bind);
    return {host, port};
}

// Blocks until the server stops.
inline void serve(const Config& config) {
    Service svc(config);
    httplib::Server server;
    bind_routes(server, svc);
    auto [host, port] = split_bind(config.bind);
    if (!server.listen(host, port)) throw Error("cannot listen on " + config.bind);
}

}  // namespace liverkg::service
