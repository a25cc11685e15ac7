// Command-line front end. Each subcommand loads its inputs, makes one
// library call and writes the result unchanged.
//
// exit 0: success, 1: usage error, 2: data error

#include <liverkg/dtree.hpp>
#include <liverkg/service.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>

using namespace liverkg;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << content;
    if (!out.flush()) throw DataError("write failed for " + path);
}

rdf::Graph load_graph(const std::string& path) { return rdf::parse_ntriples(slurp(path)); }

json metrics_json(const dtree::EvalMetrics& m) {
    return {{"accuracy", m.accuracy},
            {"macro_precision", m.macro_precision},
            {"macro_recall", m.macro_recall},
            {"macro_f1", m.macro_f1},
            {"weighted_precision", m.weighted_precision},
            {"weighted_recall", m.weighted_recall},
            {"weighted_f1", m.weighted_f1}};
}

// "20:5,40:5" -> grid points
std::vector<stream::SweepPoint> parse_custom(const std::string& text) {
    std::vector<stream::SweepPoint> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        auto colon = item.find(':');
        std::size_t b = 0, r = 0, used1 = 0, used2 = 0;
        try {
            if (colon == std::string::npos) throw std::invalid_argument(item);
            b = std::stoul(item.substr(0, colon), &used1);
            r = std::stoul(item.substr(colon + 1), &used2);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--custom", "expected batch:rules pairs, got '" + item + "'");
        }
        if (used1 != colon || used2 != item.size() - colon - 1 || b == 0 || r == 0)
            throw CLI::ValidationError("--custom", "expected positive batch:rules pairs, got '" + item + "'");
        out.push_back({b, r});
    }
    if (out.empty()) throw CLI::ValidationError("--custom", "no grid points given");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Liver disease knowledge graph toolkit"};
    app.require_subcommand(1, 1);

    std::string csv, out, graph, rules_path, query_path, format = "tsv", report, proofs, events, stats, schema, sweep,
                                                         custom, bind, data;
    std::string criterion = "gini";
    std::size_t folds = 10, batch_size = 10, repeats = 3;
    std::uint64_t seed = 0;
    std::int64_t delay_ms = 0;

    auto* ingest_cmd = app.add_subcommand("ingest", "Convert the HCV CSV to N-Triples");
    ingest_cmd->add_option("--csv", csv, "input CSV")->required();
    ingest_cmd->add_option("--out", out, "output .nt")->required();

    auto* train_cmd = app.add_subcommand("train", "Cross-validate a decision tree");
    train_cmd->add_option("--csv", csv, "input CSV")->required();
    train_cmd->add_option("--criterion", criterion, "gini or entropy")->check(CLI::IsMember({"gini", "entropy"}));
    train_cmd->add_option("--folds", folds, "number of stratified folds")->check(CLI::Range(2, 1000));
    train_cmd->add_option("--seed", seed, "fold shuffling seed");
    train_cmd->add_option("--report", report, "output JSON report")->required();

    auto* extract_cmd = app.add_subcommand("extract-rules", "Fit a tree on all records and write its paths as rules");
    extract_cmd->add_option("--csv", csv, "input CSV")->required();
    extract_cmd->add_option("--criterion", criterion, "gini or entropy")->check(CLI::IsMember({"gini", "entropy"}));
    extract_cmd->add_option("--out", out, "output rule file")->required();

    auto* infer_cmd = app.add_subcommand("infer", "Forward-chain rules over a graph");
    infer_cmd->add_option("--graph", graph, "input .nt")->required();
    infer_cmd->add_option("--rules", rules_path, "rule file")->required();
    infer_cmd->add_option("--out", out, "derived triples .nt")->required();
    infer_cmd->add_option("--proofs", proofs, "proof JSON");

    auto* query_cmd = app.add_subcommand("query", "Run a SPARQL query");
    query_cmd->add_option("--graph", graph, "input .nt")->required();
    query_cmd->add_option("--query", query_path, "query file")->required();
    query_cmd->add_option("--format", format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));

    auto* stream_cmd = app.add_subcommand("stream", "Replay a graph as a record stream");
    stream_cmd->add_option("--graph", graph, "input .nt")->required();
    stream_cmd->add_option("--rules", rules_path, "rule file")->required();
    stream_cmd->add_option("--batch-size", batch_size, "records per batch")->check(CLI::PositiveNumber);
    stream_cmd->add_option("--delay-ms", delay_ms, "pause between batches")->check(CLI::NonNegativeNumber);
    stream_cmd->add_option("--events", events, "events JSON lines");
    stream_cmd->add_option("--stats", stats, "per-batch CSV");

    auto* metrics_cmd = app.add_subcommand("metrics", "Ontology metrics and consistency");
    metrics_cmd->add_option("--graph", graph, "input .nt")->required();
    metrics_cmd->add_option("--schema", schema, "schema file (default: built-in liver schema)");

    auto* bench_cmd = app.add_subcommand("bench", "Stream timing sweeps");
    bench_cmd->add_option("--graph", graph, "input .nt")->required();
    auto* sweep_opt = bench_cmd->add_option("--sweep", sweep, "batch or rules")->check(CLI::IsMember({"batch", "rules"}));
    auto* custom_opt = bench_cmd->add_option("--custom", custom, "explicit grid as batch:rules,...");
    sweep_opt->excludes(custom_opt);
    bench_cmd->add_option("--rules", rules_path, "rule pool (default: diagnostic rules)");
    bench_cmd->add_option("--repeats", repeats, "runs per grid point")->check(CLI::Range(1, 100));
    bench_cmd->add_option("--out", out, "timing CSV")->required();

    auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
    serve_cmd->add_option("--bind", bind, "host:port (default BIND_ADDR or 127.0.0.1:8080)");
    serve_cmd->add_option("--data", data, "state directory (default DATA_DIR)");

    try {
        app.parse(argc, argv);
        if (bench_cmd->parsed() && sweep.empty() && custom.empty())
            throw CLI::RequiredError("--sweep or --custom");
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    try {
        if (ingest_cmd->parsed()) {
            auto records = ingest::load_encoded(slurp(csv));
            auto g = ingest::records_to_graph(records);
            dump(out, rdf::serialize_ntriples(g));
            std::cout << records.size() << " records, " << g.size() << " triples\n";
        } else if (train_cmd->parsed()) {
            auto data = dtree::make_dataset(ingest::load_encoded(slurp(csv)));
            dtree::TrainConfig config;
            config.criterion = dtree::parse_criterion(criterion);
            config.random_seed = seed;
            auto t0 = std::chrono::steady_clock::now();
            auto cv = dtree::cross_validate(data, config, folds);
            double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            json fold_list = json::array();
            for (const auto& f : cv.folds) fold_list.push_back(metrics_json(f));
            json j = {{"criterion", criterion}, {"folds", folds},       {"seed", seed},
                      {"records", data.size()}, {"mean", metrics_json(cv.mean)}, {"per_fold", fold_list},
                      {"runtime_s", seconds}};
            dump(report, j.dump(2) + "\n");
            std::printf("%s, %zu folds: accuracy %.2f%%, macro F1 %.2f%%, weighted F1 %.2f%% (%.2f s)\n", criterion.c_str(),
                        folds, 100 * cv.mean.accuracy, 100 * cv.mean.macro_f1, 100 * cv.mean.weighted_f1, seconds);
        } else if (extract_cmd->parsed()) {
            auto data = dtree::make_dataset(ingest::load_encoded(slurp(csv)));
            dtree::TrainConfig config;
            config.criterion = dtree::parse_criterion(criterion);
            auto tree = dtree::fit(data, config);
            auto rules = dtree::paths_to_rules(dtree::extract_paths(tree), dtree::default_feature_properties(),
                                               dtree::default_class_heads());
            dump(out, rules::serialize_rule_file(rules));
            std::cout << rules.size() << " rules from " << tree.leaf_count() << " leaves\n";
        } else if (infer_cmd->parsed()) {
            auto g = load_graph(graph);
            auto rules = rules::parse_rule_file(slurp(rules_path));
            auto result = rules::infer(g, rules, Vocabulary::clinical());
            dump(out, rdf::serialize_ntriples(result.derived));
            if (!proofs.empty()) {
                json p = json::array();
                for (const auto& step : result.proofs) p.push_back(dss::detail::step_to_json(step));
                dump(proofs, p.dump(2) + "\n");
            }
            std::cout << result.derived.size() << " derived triples in " << result.iterations << " iterations\n";
        } else if (query_cmd->parsed()) {
            auto rs = sparql::query(slurp(query_path), load_graph(graph));
            std::cout << (format == "json" ? sparql::to_json(rs).dump(2) + "\n" : sparql::to_tsv(rs));
        } else if (stream_cmd->parsed()) {
            auto records = stream::group_records(load_graph(graph));
            auto rules = rules::parse_rule_file(slurp(rules_path));
            std::ofstream ev;
            stream::Sink sink;
            if (!events.empty()) {
                ev.open(events, std::ios::binary | std::ios::trunc);
                if (!ev) throw DataError("cannot write " + events);
                sink = stream::json_lines_sink(ev);
            }
            auto summary = stream::run_stream(records, {batch_size, delay_ms}, rules, sink);
            if (!stats.empty()) dump(stats, stream::stats_csv(summary));
            std::cout << summary.batches.size() << " batches, " << summary.events.size() << " events\n";
            if (!summary.complete) throw DataError("stream stopped: " + summary.error);
        } else if (metrics_cmd->parsed()) {
            auto g = load_graph(graph);
            auto s = ontology::load_schema(schema.empty() ? std::string(knowledge::liver_schema) : slurp(schema));
            auto j = ontology::to_json(ontology::compute_metrics(s, g));
            json violations = json::array();
            for (const auto& v : ontology::check_consistency(s, g)) violations.push_back(ontology::to_json(v));
            j["violations"] = violations;
            std::cout << j.dump(2) << "\n";
        } else if (bench_cmd->parsed()) {
            std::vector<stream::SweepPoint> grid;
            try {
                grid = !custom.empty() ? parse_custom(custom)
                                       : stream::sweep_grid(sweep == "batch" ? stream::SweepKind::BatchSize
                                                                             : stream::SweepKind::RuleCount);
            } catch (const CLI::ParseError& e) {
                std::cerr << e.what() << "\n";
                return 1;
            }
            auto pool = rules_path.empty() ? knowledge::load_diagnostic_rules() : rules::parse_rule_file(slurp(rules_path));
            auto rows = stream::run_sweep(stream::group_records(load_graph(graph)), pool, grid, repeats);
            dump(out, stream::timing_csv(rows));
            for (const auto& r : rows)
                std::printf("batch %zu, %zu rules: %.4f ms/batch\n", r.batch_size, r.rule_count, r.mean_ms);
        } else if (serve_cmd->parsed()) {
            auto config = service::Config::from_env();
            if (!bind.empty()) config.bind = bind;
            if (!data.empty()) config.data_dir = data;
            std::cout << "listening on " << config.bind << std::endl;
            service::serve(config);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
