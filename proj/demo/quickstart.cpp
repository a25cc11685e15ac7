// Walks one patient through the decision loop and queries a small graph.
//
//   ./quickstart

#include <liverkg/dss.hpp>
#include <liverkg/knowledge.hpp>
#include <liverkg/sparql.hpp>

#include <iostream>

using namespace liverkg;

namespace {

ingest::EncodedRecord patient(std::int64_t id, std::map<std::string, double> labs) {
    ingest::EncodedRecord r;
    r.row_id = id;
    r.uid = ingest::record_uid(ns::records, id);
    r.age = 47;
    r.sex = 1;
    for (std::size_t i = 0; i < lab_names.size(); ++i) r.labs[i] = labs.at(std::string(lab_names[i]));
    return r;
}

}  // namespace

int main() {
    auto rules = knowledge::load_diagnostic_rules();

    auto rec = patient(1, {{"ALB", 40}, {"ALP", 50}, {"ALT", 9}, {"AST", 40}, {"BIL", 10},
                           {"CHE", 8}, {"CHOL", 5}, {"CREA", 80}, {"GGT", 20}, {"PROT", 70}});

    dss::Session s;
    s.id = "demo";
    s.enter_labs(rec);
    s.run_diagnosis(rules);
    s.ingest_report("HCV RNA: POSITIVE\nFibrosis stage: F2");
    s.make_plan();
    std::cout << dss::explain_session(s) << "\n";

    // Same record as triples, queried for AST above 35.
    auto g = ingest::records_to_graph({rec});
    auto rs = sparql::query(R"(PREFIX schema: <http://schema.org/>
SELECT ?p ?ast WHERE { ?p schema:AST ?ast . FILTER(?ast > 35) })",
                            g);
    std::cout << sparql::to_tsv(rs);
    return 0;
}
