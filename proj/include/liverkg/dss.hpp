#pragma once

// Diagnosis sessions: labs -> rule inference -> diagnosis -> recommended
// tests -> report -> treatment plan, with template explanations.

#include <liverkg/ingest.hpp>
#include <liverkg/knowledge.hpp>
#include <liverkg/ntriples.hpp>
#include <liverkg/reasoner.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace liverkg::dss {

using Json = nlohmann::json;

enum class Diagnosis { Healthy, SignsOnly, HepatitisC, Fibrosis, Cirrhosis, Indeterminate };

inline constexpr std::array<Diagnosis, 6> all_diagnoses = {Diagnosis::Healthy,  Diagnosis::SignsOnly,
                                                           Diagnosis::HepatitisC, Diagnosis::Fibrosis,
                                                           Diagnosis::Cirrhosis, Diagnosis::Indeterminate};

inline std::string_view name(Diagnosis d) {
    switch (d) {
        case Diagnosis::Healthy: return "Healthy";
        case Diagnosis::SignsOnly: return "SignsOnly";
        case Diagnosis::HepatitisC: return "HepatitisC";
        case Diagnosis::Fibrosis: return "Fibrosis";
        case Diagnosis::Cirrhosis: return "Cirrhosis";
        case Diagnosis::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

inline Diagnosis diagnosis_from_name(std::string_view s) {
    for (auto d : all_diagnoses)
        if (name(d) == s) return d;
    throw DataError("unknown diagnosis " + std::string(s));
}

// Head property for each diagnosis, highest precedence first.
inline const std::vector<std::pair<std::string, Diagnosis>>& head_properties() {
    static const std::vector<std::pair<std::string, Diagnosis>> heads = {
        {"isCirrhosisPatient", Diagnosis::Cirrhosis},
        {"isFibrosisPatient", Diagnosis::Fibrosis},
        {"isHepatitisCpatient", Diagnosis::HepatitisC},
        {"isShowingSigns", Diagnosis::SignsOnly},
        {"isHealthy", Diagnosis::Healthy},
    };
    return heads;
}

struct Firing {
    std::string rule;
    Diagnosis diagnosis;
    rules::ProofStep proof;
};

struct DiagnosisResult {
    Diagnosis diagnosis = Diagnosis::Indeterminate;
    std::vector<Firing> fired;  // every diagnostic rule whose body held, in rule order
};

inline void validate_record(const ingest::EncodedRecord& r) {
    for (std::size_t i = 0; i < r.labs.size(); ++i)
        if (!std::isfinite(r.labs[i])) throw DataError("lab " + std::string(lab_names[i]) + " is not finite");
    if (r.sex != 0 && r.sex != 1) throw DataError("sex must be 0 or 1");
    if (r.age < 0) throw DataError("age must be non-negative");
}

// Materializes the record (without its category) and reads the diagnosis
// from derived head triples. Traces come from each rule run alone so
// that rules deriving the same head are all reported.
inline DiagnosisResult diagnose(const ingest::EncodedRecord& record, const std::vector<rules::Rule>& rules,
                                const Vocabulary& vocab = Vocabulary::clinical()) {
    validate_record(record);
    rdf::Graph g;
    ingest::append_record(g, record, false);
    auto all = rules::infer(g, rules, vocab);
    auto truth = rdf::Literal::boolean(true);

    DiagnosisResult out;
    for (const auto& [prop, d] : head_properties()) {
        if (all.derived.contains({record.uid, vocab.resolve(prop), truth})) {
            out.diagnosis = d;
            break;
        }
    }
    for (const auto& rule : rules) {
        auto single = rules::infer(g, {rule}, vocab);
        for (const auto& step : single.proofs) {
            if (step.derived.subject != record.uid || !(step.derived.object == rdf::Term{truth})) continue;
            for (const auto& [prop, d] : head_properties())
                if (step.derived.predicate == vocab.resolve(prop)) out.fired.push_back({rule.name, d, step});
        }
    }
    return out;
}

// ---- tests ----

struct RecommendedTest {
    std::string test;
    std::string interval;  // empty when one-off
    std::string provenance;
    friend bool operator==(const RecommendedTest&, const RecommendedTest&) = default;
};

inline std::vector<RecommendedTest> recommend_tests(Diagnosis d) {
    switch (d) {
        case Diagnosis::Healthy: throw PreconditionError("no tests are recommended for a healthy diagnosis");
        case Diagnosis::HepatitisC:
            return {{"HCV RNA confirmation", "", "hcv_identify"},
                    {"Fibrosis staging", "", "treatment_eligibility"},
                    {"Child-Pugh assessment", "", "treatment_algorithm"}};
        case Diagnosis::Cirrhosis:
            return {{"Child-Pugh assessment", "", "treatment_algorithm"},
                    {"Ultrasound", "every6Months", "hcc_screening"},
                    {"UpperEndoscopy", "", "varices_screening"}};
        case Diagnosis::Fibrosis: return {{"Fibrosis staging", "", "advanced_fibrosis_referral"}};
        case Diagnosis::SignsOnly:
        case Diagnosis::Indeterminate: return {{"Liver function panel repeat", "", "diagnostic_follow_up"}};
    }
    return {};
}

// ---- reports ----

enum class RnaResult { Positive, Negative };
enum class ChildPugh { A, B, C };

struct ReportFacts {
    std::optional<RnaResult> hcv_rna;
    std::optional<int> fibrosis_stage;  // 0..4
    std::optional<ChildPugh> child_pugh;
    std::optional<bool> ascites;
    std::optional<bool> decompensated;
    friend bool operator==(const ReportFacts&, const ReportFacts&) = default;
};

struct ParsedReport {
    ReportFacts facts;
    std::size_t recognized = 0;
    std::size_t ignored = 0;  // non-blank lines matching no pattern
};

inline std::string_view rna_text(RnaResult r) { return r == RnaResult::Positive ? "positive" : "negative"; }
inline std::string_view child_pugh_text(ChildPugh c) { return c == ChildPugh::A ? "A" : c == ChildPugh::B ? "B" : "C"; }

inline ParsedReport parse_report(std::string_view text) {
    static const std::regex rna(R"(^\s*HCV\s*RNA\s*:\s*(POSITIVE|NEGATIVE)\s*$)", std::regex::icase);
    static const std::regex stage(R"(^\s*FIBROSIS\s+STAGE\s*:\s*F([0-4])\s*$)", std::regex::icase);
    static const std::regex cp(R"(^\s*CHILD[-\s]?PUGH\s*:\s*([ABC])\s*$)", std::regex::icase);
    static const std::regex asc(R"(^\s*ASCITES\s*:\s*(PRESENT|ABSENT)\s*$)", std::regex::icase);

    ParsedReport out;
    auto set = [](auto& slot, auto value, const char* key) {
        if (slot && *slot != value) throw ConflictError(std::string("conflicting values for ") + key);
        slot = value;
    };
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::smatch m;
        auto upper = [](std::string s) {
            for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            return s;
        };
        if (std::regex_match(line, m, rna)) {
            set(out.facts.hcv_rna, upper(m[1]) == "POSITIVE" ? RnaResult::Positive : RnaResult::Negative, "HCV RNA");
        } else if (std::regex_match(line, m, stage)) {
            set(out.facts.fibrosis_stage, std::stoi(m[1]), "fibrosis stage");
        } else if (std::regex_match(line, m, cp)) {
            auto c = upper(m[1]);
            set(out.facts.child_pugh, c == "A" ? ChildPugh::A : c == "B" ? ChildPugh::B : ChildPugh::C, "Child-Pugh");
        } else if (std::regex_match(line, m, asc)) {
            set(out.facts.ascites, upper(m[1]) == "PRESENT", "ascites");
        } else {
            if (line.find_first_not_of(" \t") != std::string::npos) ++out.ignored;
            continue;
        }
        ++out.recognized;
    }
    if (out.facts.child_pugh && !out.facts.decompensated)
        out.facts.decompensated = *out.facts.child_pugh != ChildPugh::A;
    return out;
}

// ---- treatment ----

struct Drug {
    std::string name;
    double min_mg = 0;
    double max_mg = 0;
    std::string provenance;
    std::string dose() const {
        auto f = [](double v) {
            return v == std::floor(v) ? std::to_string(static_cast<long long>(v)) : rdf::format_double(v);
        };
        return min_mg == max_mg ? f(min_mg) + " mg" : f(min_mg) + "-" + f(max_mg) + " mg";
    }
    friend bool operator==(const Drug&, const Drug&) = default;
};

struct PlanItem {
    std::string action;
    std::string interval;  // empty when not periodic
    std::string provenance;
    friend bool operator==(const PlanItem&, const PlanItem&) = default;
};

struct TreatmentPlan {
    std::string branch;  // treatment-algorithm branch taken
    std::vector<Drug> regimen;
    int duration_weeks = 0;
    std::vector<PlanItem> monitoring;
    std::vector<PlanItem> lifestyle;
    std::vector<PlanItem> referrals;
    std::vector<PlanItem> management;
    std::vector<std::string> notes;
    friend bool operator==(const TreatmentPlan&, const TreatmentPlan&) = default;
};

// Cirrhosis is marked by a Child-Pugh class or stage F4.
inline bool has_cirrhosis(const ReportFacts& f) { return f.child_pugh || (f.fibrosis_stage && *f.fibrosis_stage >= 4); }

inline TreatmentPlan plan_treatment(const ReportFacts& f) {
    if (!f.hcv_rna) throw PreconditionError("treatment planning needs an HCV RNA result");
    TreatmentPlan p;
    bool cirrhosis = has_cirrhosis(f);
    bool decompensated = f.decompensated.value_or(false);
    const std::string algo = "treatment_algorithm:";

    if (*f.hcv_rna == RnaResult::Negative) {
        p.branch = algo + "rna_negative";
        p.lifestyle = {{"AvoidAlcohol", "", p.branch}, {"Vaccinate HepatitisA", "", p.branch},
                       {"Vaccinate HepatitisB", "", p.branch}};
        p.notes.push_back("HCV RNA not detected: no antiviral treatment indicated.");
        return p;
    }

    if (!cirrhosis) {
        p.branch = algo + "no_cirrhosis";
        p.regimen = {{"Sofosbuvir", 400, 400, p.branch}, {"Daclatasvir", 60, 60, p.branch}};
    } else if (!decompensated) {
        p.branch = algo + "compensated_cirrhosis";
        p.regimen = {{"Sofosbuvir", 400, 400, p.branch}, {"Velpatasvir", 100, 100, p.branch}};
        if (!f.child_pugh) p.notes.push_back("Stage F4 without a Child-Pugh class: planned as compensated; assess Child-Pugh.");
    } else {
        p.branch = algo + "decompensated_cirrhosis";
        p.regimen = {{"Sofosbuvir", 400, 400, p.branch}, {"Velpatasvir", 100, 100, p.branch},
                     {"Ribavirin", 600, 1200, p.branch}};
    }
    p.duration_weeks = 12;

    p.monitoring = {{"On-treatment review", "every4Weeks", "on_treatment_monitoring"},
                    {"HCV RNA test", "postTreatment12Weeks", "post_treatment_followup"}};
    p.lifestyle = {{"AvoidAlcohol", "", "hcv_lifestyle"}, {"Vaccinate HepatitisA", "", "hcv_lifestyle"},
                   {"Vaccinate HepatitisB", "", "hcv_lifestyle"}};
    if (f.fibrosis_stage && *f.fibrosis_stage >= 3)
        p.referrals.push_back({"Specialized management", "", "advanced_fibrosis_referral"});
    if (cirrhosis) {
        p.monitoring.push_back({"Ultrasound", "every6Months", "hcc_screening"});
        p.monitoring.push_back({"UpperEndoscopy", "", "varices_screening"});
        p.monitoring.push_back({"HepaticEncephalopathySigns", "", "encephalopathy_monitoring"});
        p.lifestyle.push_back({"AbstainFromAlcohol", "", "cirrhosis_abstinence"});
    }
    if (f.ascites.value_or(false)) {
        p.management.push_back({"Diuretics", "", "ascites_management"});
        p.management.push_back({"SodiumRestriction", "", "ascites_management"});
    }
    if (decompensated) {
        p.referrals.push_back({"LiverTransplantEvaluation", "", "transplant_referral"});
        p.monitoring.push_back({"Adverse reaction review with regimen adjustment", "every4Weeks", p.branch});
    }
    return p;
}

enum class FollowupOutcome { SvrAchieved, NonResponder };

struct Followup {
    FollowupOutcome outcome;
    std::string note;
    std::string provenance;
    friend bool operator==(const Followup&, const Followup&) = default;
};

inline Followup assess_followup(const ReportFacts& post) {
    if (!post.hcv_rna) throw PreconditionError("follow-up assessment needs an HCV RNA result");
    if (*post.hcv_rna == RnaResult::Negative)
        return {FollowupOutcome::SvrAchieved, "HCV RNA undetectable 12 weeks after treatment: sustained virological response.",
                "post_treatment_followup"};
    return {FollowupOutcome::NonResponder, "HCV RNA detected 12 weeks after treatment: non-responder, refer for retreatment.",
            "non_responder"};
}

// ---- sessions ----

enum class State { New, LabsEntered, Diagnosed, TestsRecommended, ReportIngested, TreatmentPlanned };

inline constexpr std::array<std::string_view, 6> state_names = {"NEW", "LABS_ENTERED", "DIAGNOSED",
                                                                "TESTS_RECOMMENDED", "REPORT_INGESTED",
                                                                "TREATMENT_PLANNED"};

inline std::string_view name(State s) { return state_names[static_cast<std::size_t>(s)]; }

inline State state_from_name(std::string_view s) {
    for (std::size_t i = 0; i < state_names.size(); ++i)
        if (state_names[i] == s) return static_cast<State>(i);
    throw DataError("unknown session state " + std::string(s));
}

struct Session {
    std::string id;
    State state = State::New;
    std::optional<ingest::EncodedRecord> record;
    std::optional<DiagnosisResult> diagnosis;
    std::vector<RecommendedTest> tests;
    std::optional<ParsedReport> report;
    std::optional<TreatmentPlan> plan;
    std::optional<Followup> followup;

    void enter_labs(ingest::EncodedRecord r) {
        require(State::New, "enter labs");
        validate_record(r);
        record = std::move(r);
        state = State::LabsEntered;
    }

    // Diagnoses and, unless healthy, recommends tests in the same step.
    const DiagnosisResult& run_diagnosis(const std::vector<rules::Rule>& rules,
                                         const Vocabulary& vocab = Vocabulary::clinical()) {
        require(State::LabsEntered, "diagnose");
        diagnosis = diagnose(*record, rules, vocab);
        state = State::Diagnosed;
        if (diagnosis->diagnosis != Diagnosis::Healthy) {
            tests = recommend_tests(diagnosis->diagnosis);
            state = State::TestsRecommended;
        }
        return *diagnosis;
    }

    const ReportFacts& ingest_report(std::string_view text) {
        bool healthy_skip = state == State::Diagnosed && diagnosis && diagnosis->diagnosis == Diagnosis::Healthy;
        if (!healthy_skip) require(State::TestsRecommended, "ingest a report");
        report = parse_report(text);
        state = State::ReportIngested;
        return report->facts;
    }

    const TreatmentPlan& make_plan() {
        require(State::ReportIngested, "plan treatment");
        plan = plan_treatment(report->facts);
        state = State::TreatmentPlanned;
        return *plan;
    }

    const Followup& assess(std::string_view post_report) {
        require(State::TreatmentPlanned, "assess follow-up");
        if (plan->regimen.empty()) throw PreconditionError("no treatment was given in this session");
        followup = assess_followup(parse_report(post_report).facts);
        return *followup;
    }

    friend bool operator==(const Session& a, const Session& b);

private:
    void require(State expected, const char* what) const {
        if (state != expected)
            throw PreconditionError(std::string("cannot ") + what + " in state " + std::string(name(state)) +
                                    " (expected " + std::string(name(expected)) + ")");
    }
};

// ---- explanations ----

namespace detail {

inline std::string tag(const std::string& provenance) { return " [" + provenance + "]"; }

inline std::string item_text(const PlanItem& i) {
    return i.action + (i.interval.empty() ? "" : " (" + i.interval + ")") + tag(i.provenance);
}

inline std::string facts_text(const ReportFacts& f) {
    std::vector<std::string> parts;
    if (f.hcv_rna) parts.push_back("HCV RNA " + std::string(rna_text(*f.hcv_rna)));
    if (f.fibrosis_stage) parts.push_back("fibrosis stage F" + std::to_string(*f.fibrosis_stage));
    if (f.child_pugh) parts.push_back("Child-Pugh " + std::string(child_pugh_text(*f.child_pugh)));
    if (f.ascites) parts.push_back(std::string("ascites ") + (*f.ascites ? "present" : "absent"));
    if (f.decompensated) parts.push_back(*f.decompensated ? "decompensated" : "compensated");
    if (parts.empty()) return "no recognized findings";
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
    return out;
}

}  // namespace detail

using TextPostProcessor = std::function<std::string(const std::string&)>;

inline std::string explain_session(const Session& s, const Vocabulary& vocab = Vocabulary::clinical()) {
    if (s.state < State::Diagnosed || !s.diagnosis) throw PreconditionError("session has not been diagnosed");
    std::ostringstream out;
    out << "Session " << s.id << "\n";
    out << "Diagnosis: " << name(s.diagnosis->diagnosis) << "\n";
    if (s.diagnosis->fired.empty()) out << "No diagnostic rule fired for this record.\n";
    for (const auto& f : s.diagnosis->fired) {
        out << "Rule " << f.rule << " concluded " << rules::display_triple(f.proof.derived, vocab) << "\n";
        for (const auto& c : f.proof.comparisons) out << "  satisfied: " << rules::display_comparison(c, vocab) << "\n";
    }
    if (!s.tests.empty()) {
        out << "Recommended tests:\n";
        for (const auto& t : s.tests)
            out << "  - " << t.test << (t.interval.empty() ? "" : " (" + t.interval + ")") << detail::tag(t.provenance) << "\n";
    }
    if (s.report) out << "Report: " << detail::facts_text(s.report->facts) << "\n";
    if (s.plan) {
        const auto& p = *s.plan;
        out << "Treatment plan" << detail::tag(p.branch) << ":\n";
        if (!p.regimen.empty()) {
            out << "  Regimen for " << p.duration_weeks << " weeks:\n";
            for (const auto& d : p.regimen) out << "    - " << d.name << " " << d.dose() << detail::tag(d.provenance) << "\n";
        }
        auto section = [&](const char* title, const std::vector<PlanItem>& items) {
            if (items.empty()) return;
            out << "  " << title << ":\n";
            for (const auto& i : items) out << "    - " << detail::item_text(i) << "\n";
        };
        section("Monitoring", p.monitoring);
        section("Lifestyle", p.lifestyle);
        section("Management", p.management);
        section("Referrals", p.referrals);
        for (const auto& n : p.notes) out << "  Note: " << n << "\n";
        if (std::any_of(p.regimen.begin(), p.regimen.end(), [](const Drug& d) { return d.name == "Ribavirin"; }))
            out << "  Note: monitor for adverse reactions; the medication regimen may need adjustment.\n";
        if (!p.regimen.empty())
            out << "  Caution: confirm HIV status is negative and exclude pregnancy before starting medication.\n";
    }
    if (s.followup) out << "Follow-up: " << s.followup->note << detail::tag(s.followup->provenance) << "\n";
    return out.str();
}

// Template text, optionally rewritten by a remote client. Any client
// failure falls back to the template.
inline std::string explain_session(const Session& s, const TextPostProcessor& post,
                                   const Vocabulary& vocab = Vocabulary::clinical()) {
    auto text = explain_session(s, vocab);
    if (!post) return text;
    try {
        auto rewritten = post(text);
        return rewritten.empty() ? text : rewritten;
    } catch (const std::exception&) {
        return text;
    }
}

// ---- JSON ----

inline Json record_to_json(const ingest::EncodedRecord& r) {
    Json labs = Json::object();
    for (std::size_t i = 0; i < lab_names.size(); ++i) labs[std::string(lab_names[i])] = r.labs[i];
    return {{"uid", r.uid.str()}, {"row_id", r.row_id}, {"age", r.age}, {"sex", r.sex}, {"labs", labs}};
}

// Labs are required; uid defaults to the record namespace with row_id.
inline ingest::EncodedRecord record_from_json(const Json& j) {
    if (!j.is_object()) throw DataError("record must be a JSON object");
    ingest::EncodedRecord r;
    r.row_id = j.value("row_id", std::int64_t{0});
    r.uid = j.contains("uid") ? rdf::Iri(j.at("uid").get<std::string>()) : ingest::record_uid(ns::records, r.row_id);
    r.age = j.value("age", 0);
    r.sex = j.value("sex", 0);
    if (!j.contains("labs") || !j.at("labs").is_object()) throw DataError("record needs a labs object");
    const auto& labs = j.at("labs");
    for (std::size_t i = 0; i < lab_names.size(); ++i) {
        std::string key(lab_names[i]);
        if (!labs.contains(key) || !labs.at(key).is_number()) throw DataError("missing or non-numeric lab " + key);
        r.labs[i] = labs.at(key).get<double>();
    }
    validate_record(r);
    return r;
}

namespace detail {

inline Json step_to_json(const rules::ProofStep& s) {
    Json bindings = Json::object();
    for (const auto& [k, v] : s.bindings) bindings[k] = rdf::to_ntriples(v);
    Json premises = Json::array();
    for (const auto& p : s.premises) premises.push_back(rdf::to_ntriples(p));
    Json comparisons = Json::array();
    for (const auto& c : s.comparisons)
        comparisons.push_back(
            {{"op", rules::builtin_name(c.op)}, {"left", rdf::to_ntriples(c.left)}, {"right", rdf::to_ntriples(c.right)}});
    return {{"derived", rdf::to_ntriples(s.derived)}, {"rule", s.rule}, {"bindings", bindings},
            {"premises", premises}, {"comparisons", comparisons}};
}

inline rdf::Triple triple_from(const std::string& line) {
    auto g = rdf::parse_ntriples(line);
    if (g.size() != 1) throw DataError("expected one triple: " + line);
    return g.triples().front();
}

inline rules::BuiltinOp op_from(const std::string& s) {
    using rules::BuiltinOp;
    for (auto op : {BuiltinOp::LessThan, BuiltinOp::LessThanOrEqual, BuiltinOp::GreaterThan,
                    BuiltinOp::GreaterThanOrEqual, BuiltinOp::Equal})
        if (rules::builtin_name(op) == s) return op;
    throw DataError("unknown builtin " + s);
}

inline rules::ProofStep step_from_json(const Json& j) {
    rules::ProofStep s;
    s.derived = triple_from(j.at("derived").get<std::string>());
    s.rule = j.at("rule").get<std::string>();
    for (const auto& [k, v] : j.at("bindings").items()) s.bindings[k] = rdf::parse_term(v.get<std::string>());
    for (const auto& p : j.at("premises")) s.premises.push_back(triple_from(p.get<std::string>()));
    for (const auto& c : j.at("comparisons"))
        s.comparisons.push_back({op_from(c.at("op").get<std::string>()), rdf::parse_term(c.at("left").get<std::string>()),
                                 rdf::parse_term(c.at("right").get<std::string>())});
    return s;
}

inline Json items_to_json(const std::vector<PlanItem>& items) {
    Json out = Json::array();
    for (const auto& i : items) out.push_back({{"action", i.action}, {"interval", i.interval}, {"provenance", i.provenance}});
    return out;
}

inline std::vector<PlanItem> items_from_json(const Json& j) {
    std::vector<PlanItem> out;
    for (const auto& i : j)
        out.push_back({i.at("action").get<std::string>(), i.at("interval").get<std::string>(),
                       i.at("provenance").get<std::string>()});
    return out;
}

template <class T>
Json opt(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> opt_from(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace detail

inline Json to_json(const DiagnosisResult& d) {
    Json fired = Json::array();
    for (const auto& f : d.fired)
        fired.push_back({{"rule", f.rule}, {"diagnosis", name(f.diagnosis)}, {"proof", detail::step_to_json(f.proof)}});
    return {{"diagnosis", name(d.diagnosis)}, {"fired", fired}};
}

inline Json to_json(const std::vector<RecommendedTest>& tests) {
    Json out = Json::array();
    for (const auto& t : tests) out.push_back({{"test", t.test}, {"interval", t.interval}, {"provenance", t.provenance}});
    return out;
}

inline Json to_json(const ReportFacts& f) {
    return {{"hcv_rna", f.hcv_rna ? Json(std::string(rna_text(*f.hcv_rna))) : Json(nullptr)},
            {"fibrosis_stage", detail::opt(f.fibrosis_stage)},
            {"child_pugh", f.child_pugh ? Json(std::string(child_pugh_text(*f.child_pugh))) : Json(nullptr)},
            {"ascites", detail::opt(f.ascites)},
            {"decompensated", detail::opt(f.decompensated)}};
}

inline ReportFacts facts_from_json(const Json& j) {
    ReportFacts f;
    if (auto r = detail::opt_from<std::string>(j, "hcv_rna"))
        f.hcv_rna = *r == "positive" ? RnaResult::Positive : RnaResult::Negative;
    f.fibrosis_stage = detail::opt_from<int>(j, "fibrosis_stage");
    if (auto c = detail::opt_from<std::string>(j, "child_pugh"))
        f.child_pugh = *c == "A" ? ChildPugh::A : *c == "B" ? ChildPugh::B : ChildPugh::C;
    f.ascites = detail::opt_from<bool>(j, "ascites");
    f.decompensated = detail::opt_from<bool>(j, "decompensated");
    return f;
}

inline Json to_json(const TreatmentPlan& p) {
    Json regimen = Json::array();
    for (const auto& d : p.regimen)
        regimen.push_back({{"drug", d.name}, {"dose", d.dose()}, {"min_mg", d.min_mg}, {"max_mg", d.max_mg},
                           {"provenance", d.provenance}});
    return {{"branch", p.branch},
            {"regimen", regimen},
            {"duration_weeks", p.duration_weeks},
            {"monitoring", detail::items_to_json(p.monitoring)},
            {"lifestyle", detail::items_to_json(p.lifestyle)},
            {"referrals", detail::items_to_json(p.referrals)},
            {"management", detail::items_to_json(p.management)},
            {"notes", p.notes}};
}

inline TreatmentPlan plan_from_json(const Json& j) {
    TreatmentPlan p;
    p.branch = j.at("branch").get<std::string>();
    for (const auto& d : j.at("regimen"))
        p.regimen.push_back({d.at("drug").get<std::string>(), d.at("min_mg").get<double>(), d.at("max_mg").get<double>(),
                             d.at("provenance").get<std::string>()});
    p.duration_weeks = j.at("duration_weeks").get<int>();
    p.monitoring = detail::items_from_json(j.at("monitoring"));
    p.lifestyle = detail::items_from_json(j.at("lifestyle"));
    p.referrals = detail::items_from_json(j.at("referrals"));
    p.management = detail::items_from_json(j.at("management"));
    p.notes = j.at("notes").get<std::vector<std::string>>();
    return p;
}

inline Json to_json(const Followup& f) {
    return {{"outcome", f.outcome == FollowupOutcome::SvrAchieved ? "SVR_achieved" : "NonResponder"},
            {"note", f.note},
            {"provenance", f.provenance}};
}

inline Json to_json(const Session& s) {
    Json j = {{"id", s.id}, {"state", name(s.state)}};
    j["record"] = s.record ? record_to_json(*s.record) : Json(nullptr);
    j["diagnosis"] = s.diagnosis ? to_json(*s.diagnosis) : Json(nullptr);
    j["tests"] = to_json(s.tests);
    j["report"] = s.report ? Json{{"facts", to_json(s.report->facts)},
                                  {"recognized", s.report->recognized},
                                  {"ignored", s.report->ignored}}
                           : Json(nullptr);
    j["plan"] = s.plan ? to_json(*s.plan) : Json(nullptr);
    j["followup"] = s.followup ? to_json(*s.followup) : Json(nullptr);
    return j;
}

inline Session session_from_json(const Json& j) {
    Session s;
    s.id = j.at("id").get<std::string>();
    s.state = state_from_name(j.at("state").get<std::string>());
    if (!j.at("record").is_null()) s.record = record_from_json(j.at("record"));
    if (!j.at("diagnosis").is_null()) {
        DiagnosisResult d;
        d.diagnosis = diagnosis_from_name(j.at("diagnosis").at("diagnosis").get<std::string>());
        for (const auto& f : j.at("diagnosis").at("fired"))
            d.fired.push_back({f.at("rule").get<std::string>(), diagnosis_from_name(f.at("diagnosis").get<std::string>()),
                               detail::step_from_json(f.at("proof"))});
        s.diagnosis = std::move(d);
    }
    for (const auto& t : j.at("tests"))
        s.tests.push_back({t.at("test").get<std::string>(), t.at("interval").get<std::string>(),
                           t.at("provenance").get<std::string>()});
    if (!j.at("report").is_null()) {
        const auto& r = j.at("report");
        s.report = ParsedReport{facts_from_json(r.at("facts")), r.at("recognized").get<std::size_t>(),
                                r.at("ignored").get<std::size_t>()};
    }
    if (!j.at("plan").is_null()) s.plan = plan_from_json(j.at("plan"));
    if (!j.at("followup").is_null()) {
        const auto& f = j.at("followup");
        s.followup = Followup{f.at("outcome").get<std::string>() == "SVR_achieved" ? FollowupOutcome::SvrAchieved
                                                                                    : FollowupOutcome::NonResponder,
                              f.at("note").get<std::string>(), f.at("provenance").get<std::string>()};
    }
    return s;
}

// Field-wise; proofs compare through their JSON form.
inline bool operator==(const Session& a, const Session& b) { return to_json(a) == to_json(b); }

}  // namespace liverkg::dss
