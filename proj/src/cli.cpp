#include "paireval/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "paireval/cache.hpp"
#include "paireval/core.hpp"
#include "paireval/errors.hpp"
#include "paireval/http_judge.hpp"
#include "paireval/judge.hpp"
#include "paireval/metaeval.hpp"
#include "paireval/prompt.hpp"
#include "paireval/rng.hpp"
#include "paireval/sample.hpp"
#include "paireval/scorer.hpp"
#include "paireval/stats.hpp"
#include "paireval/synth.hpp"

namespace paireval::cli {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt_double(double value) {
    std::ostringstream out;
    out.precision(17);
    out << value;
    return out.str();
}

std::string fmt_bool(bool value) { return value ? "true" : "false"; }

// Typed view over the resolved argument map. Missing keys mean a malformed
// manifest or a programming error, so they throw DataError.
class Args {
  public:
    explicit Args(const RunConfig& cfg) : cfg_(cfg) {}

    const std::string& get(const std::string& key) const {
        const auto it = cfg_.args.find(key);
        if (it == cfg_.args.end()) throw DataError("missing argument '" + key + "'");
        return it->second;
    }
    std::string get_or(const std::string& key, const std::string& fallback) const {
        const auto it = cfg_.args.find(key);
        return it == cfg_.args.end() ? fallback : it->second;
    }
    double get_double(const std::string& key) const {
        try {
            return std::stod(get(key));
        } catch (const std::exception&) {
            throw DataError("argument '" + key + "' is not a number: " + get(key));
        }
    }
    std::uint64_t get_u64(const std::string& key) const {
        try {
            return std::stoull(get(key));
        } catch (const std::exception&) {
            throw DataError("argument '" + key + "' is not an unsigned integer: " + get(key));
        }
    }
    int get_int(const std::string& key) const {
        try {
            return std::stoi(get(key));
        } catch (const std::exception&) {
            throw DataError("argument '" + key + "' is not an integer: " + get(key));
        }
    }
    bool get_bool(const std::string& key) const {
        const std::string& value = get(key);
        if (value == "true") return true;
        if (value == "false") return false;
        throw DataError("argument '" + key + "' is not a boolean: " + value);
    }
    bool has(const std::string& key) const {
        const auto it = cfg_.args.find(key);
        return it != cfg_.args.end() && !it->second.empty();
    }

  private:
    const RunConfig& cfg_;
};

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for hashing: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return "sha256:" + sha256_hex_string(buf.str());
}

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

void write_text_file(const std::string& path, const std::string& content) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open output file: " + path);
    out << content;
    if (!out) throw DataError("failed writing output file: " + path);
}

// The manifest is the audit record: every resolved argument, content hashes
// of every input file, the produced outputs, and the logical judge-call
// count. Deliberately no timestamps, so identical runs write identical
// manifests.
void write_manifest(const RunConfig& cfg, const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& outputs, std::uint64_t judge_calls) {
    const auto it = cfg.args.find("manifest");
    if (it == cfg.args.end() || it->second.empty()) return;

    ordered_json manifest;
    manifest["tool"] = "paireval";
    manifest["version"] = kVersion;
    manifest["command"] = cfg.command;
    ordered_json args = ordered_json::object();
    for (const auto& [key, value] : cfg.args) args[key] = value; // std::map: sorted keys
    manifest["args"] = std::move(args);
    ordered_json inputs = ordered_json::object();
    {
        std::map<std::string, std::string> hashed;
        for (const auto& path : input_paths) {
            if (!path.empty()) hashed.emplace(path, hash_file(path));
        }
        for (const auto& [path, digest] : hashed) inputs[path] = digest;
    }
    manifest["inputs"] = std::move(inputs);
    manifest["outputs"] = outputs;
    manifest["judge_calls"] = judge_calls;

    write_text_file(it->second, manifest.dump(2) + "\n");
}

struct JudgeBundle {
    std::shared_ptr<Judge> base;
    std::shared_ptr<VerdictCache> cache;
    std::shared_ptr<CachingJudge> caching;
    std::shared_ptr<CountingJudge> counting;

    Judge& judge() { return *counting; }
    std::uint64_t calls() const { return counting->total_calls(); }
};

JudgeConfig judge_config_from(const Args& args) {
    JudgeConfig cfg;
    const std::string backend = args.get("backend");
    if (backend == "mock") cfg.backend = BackendKind::kMock;
    else if (backend == "http") cfg.backend = BackendKind::kHttp;
    else throw DataError("unknown backend: " + backend);
    cfg.endpoint = args.get_or("endpoint", "");
    cfg.model = args.get_or("model", "");
    cfg.api = args.get_or("api", "completions") == "chat" ? ApiKind::kChat : ApiKind::kCompletions;
    cfg.epsilon_floor = args.get_double("epsilon_floor");
    cfg.mock_sharpness = args.get_double("mock_sharpness");
    cfg.logprob_top_k = args.get_int("logprob_top_k");
    cfg.request_timeout = std::chrono::milliseconds(args.get_int("timeout_ms"));
    cfg.max_retries = args.get_int("retries");
    cfg.max_in_flight = args.get_int("max_inflight");
    cfg.insecure_tls = args.get_bool("insecure");
    validate(cfg);
    return cfg;
}

JudgeBundle build_judge(const Args& args) {
    const JudgeConfig cfg = judge_config_from(args);
    JudgeBundle bundle;
    std::string decoding;
    if (cfg.backend == BackendKind::kHttp) {
        auto http = std::make_shared<HttpJudge>(cfg);
        decoding = http->decoding_params();
        bundle.base = std::move(http);
    } else {
        decoding = "mock;sharpness=" + fmt_double(cfg.mock_sharpness) +
                   ";floor=" + fmt_double(cfg.epsilon_floor);
        bundle.base = std::make_shared<MockJudge>(cfg);
    }

    std::shared_ptr<Judge> effective = bundle.base;
    const std::string cache_dir = args.get_or("cache_dir", "");
    if (!cache_dir.empty()) {
        bundle.cache = std::make_shared<VerdictCache>(cache_dir, bundle.base->id(),
                                                      cfg.model.empty() ? "default" : cfg.model);
        if (bundle.cache->corrupt_entries() > 0) {
            std::cerr << "warning: ignored " << bundle.cache->corrupt_entries()
                      << " corrupt cache entries in " << bundle.cache->path() << "\n";
        }
        bundle.caching =
            std::make_shared<CachingJudge>(effective, bundle.cache, cfg.model, decoding);
        effective = bundle.caching;
    }
    bundle.counting = std::make_shared<CountingJudge>(effective);
    return bundle;
}

LoadOptions load_options_from(const Args& args) {
    LoadOptions opts;
    opts.lenient = args.get_bool("lenient");
    return opts;
}

void warn_skipped(const std::string& path, std::size_t skipped) {
    if (skipped > 0)
        std::cerr << "warning: skipped " << skipped << " malformed records in " << path << "\n";
}

PromptTemplate pair_template_from(const Args& args) {
    const std::string path = args.get_or("template", "");
    return path.empty() ? default_pairwise_template() : load_template(path, TemplateKind::kPairwise);
}

PromptTemplate direct_template_from(const Args& args) {
    const std::string path = args.get_or("direct_template", "");
    if (!path.empty()) return load_template(path, TemplateKind::kDirect);
    // `score directeval --template X` also points at a direct template.
    const std::string shared = args.get_or("template", "");
    if (!shared.empty() && args.get_or("metric", "") == "directeval")
        return load_template(shared, TemplateKind::kDirect);
    return default_direct_template();
}

// Comparison-set resolution shared by score/bias-report/etc.
ComparisonSet resolve_comparisons(const Args& args, std::span<const Conversation> targets,
                                  std::vector<std::string>& input_paths) {
    const std::string explicit_path = args.get_or("comparisons", "");
    std::string from = args.get_or("comparisons_from", "");
    const std::string corpus_path = args.get_or("corpus", "");
    const std::size_t n = args.get_u64("n");
    const std::uint64_t seed = args.get_u64("seed");

    if (!explicit_path.empty()) {
        input_paths.push_back(explicit_path);
        return comparison_set_from_file(explicit_path);
    }
    if (from.empty()) from = corpus_path.empty() ? "" : "corpus";
    if (from == "corpus") {
        if (corpus_path.empty())
            throw DataError("--comparisons-from corpus requires --corpus PATH");
        input_paths.push_back(corpus_path);
        const auto corpus = load_dialogues(corpus_path, load_options_from(args));
        warn_skipped(corpus_path, corpus.skipped);
        return sample_comparisons_from_corpus(corpus.items, n, seed);
    }
    if (from == "test") return sample_comparisons_from_conversations(targets, n, seed);
    throw DataError(
        "no comparison source: pass --comparisons PATH, or --comparisons-from corpus --corpus "
        "PATH, or --comparisons-from test");
}

std::vector<std::pair<std::string, double>> read_score_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open scores file: " + path);
    std::vector<std::pair<std::string, double>> scores;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("id") ||
            !rec["id"].is_string() || !rec.contains("score") || !rec["score"].is_number()) {
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected a JSON object with string 'id' and numeric 'score'");
        }
        scores.emplace_back(rec["id"].get<std::string>(), rec["score"].get<double>());
    }
    return scores;
}

// Dataset-ordered (metric, human) vectors; any id mismatch is an error.
std::pair<std::vector<double>, std::vector<double>> align_with_dataset(
    std::span<const std::pair<std::string, double>> scores,
    std::span<const MetaEvalInstance> dataset) {
    std::map<std::string, double> by_id;
    for (const auto& [id, score] : scores) by_id.emplace(id, score);
    std::vector<double> metric, human;
    std::string missing;
    for (const auto& instance : dataset) {
        const auto it = by_id.find(instance.conversation.id);
        if (it == by_id.end()) {
            missing += " " + instance.conversation.id;
            continue;
        }
        metric.push_back(it->second);
        human.push_back(instance.human_score);
        by_id.erase(it);
    }
    if (!missing.empty()) throw DataError("no metric score for:" + missing);
    if (!by_id.empty()) {
        std::string extra;
        for (const auto& [id, score] : by_id) extra += " " + id;
        throw DataError("metric scores with no dataset instance:" + extra);
    }
    return {std::move(metric), std::move(human)};
}

std::string report_lines(std::span<const ScoreReport> reports) {
    std::string out;
    for (const auto& report : reports) {
        out += serialize_report(report);
        out += '\n';
    }
    return out;
}

int run_score(const RunConfig& cfg) {
    const Args args(cfg);
    const std::string input_path = args.get("input");
    const std::string out_path = args.get("out");
    std::vector<std::string> input_paths{input_path};

    const auto loaded = load_conversations(input_path, load_options_from(args));
    warn_skipped(input_path, loaded.skipped);
    const auto& targets = loaded.items;
    if (targets.empty()) throw DataError("no targets in " + input_path);

    JudgeBundle bundle = build_judge(args);
    const std::string metric = args.get("metric");
    const int workers = args.get_int("workers");

    std::vector<ScoreReport> reports;
    if (metric == "paireval") {
        const PromptTemplate tpl = pair_template_from(args);
        if (args.has("template")) input_paths.push_back(args.get("template"));
        if (args.get_bool("exhaustive")) {
            if (args.get("position") != "both")
                throw DataError("--exhaustive implies swap-averaged scoring; drop --position");
            reports = paireval_exhaustive(bundle.judge(), tpl, targets, workers);
        } else {
            const ComparisonSet comparisons = resolve_comparisons(args, targets, input_paths);
            BatchOptions batch;
            batch.position = position_mode_from_string(args.get("position"));
            batch.workers = workers;
            reports = score_batch_paireval(bundle.judge(), tpl, targets, comparisons, batch);
        }
    } else if (metric == "directeval") {
        const PromptTemplate tpl = direct_template_from(args);
        if (args.has("template")) input_paths.push_back(args.get("template"));
        BatchOptions batch;
        batch.normalize_direct = args.get_bool("normalize");
        batch.workers = workers;
        reports = score_batch_directeval(bundle.judge(), tpl, targets, batch);
    } else {
        throw DataError("unknown metric: " + metric);
    }

    write_text_file(out_path, report_lines(reports));
    write_manifest(cfg, input_paths, {out_path}, bundle.calls());
    std::cerr << "scored " << reports.size() << " targets with " << bundle.calls()
              << " judge calls -> " << out_path << "\n";
    if (bundle.caching) std::cerr << "cache hits: " << bundle.caching->hits() << "\n";
    return kExitOk;
}

int run_synth(const RunConfig& cfg) {
    const Args args(cfg);
    const std::string corpus_path = args.get("corpus");
    const std::string out_path = args.get("out");
    std::vector<std::string> input_paths{corpus_path};

    const auto corpus = load_dialogues(corpus_path, load_options_from(args));
    warn_skipped(corpus_path, corpus.skipped);

    AdversarialPool pool;
    const std::string adversarial_path = args.get_or("adversarial", "");
    if (!adversarial_path.empty()) {
        input_paths.push_back(adversarial_path);
        const auto records = load_adversarial(adversarial_path, load_options_from(args));
        warn_skipped(adversarial_path, records.skipped);
        pool = AdversarialPool(records.items);
    }

    SynthOptions opts;
    opts.count = args.get_u64("count");
    opts.adversarial_fraction = args.get_double("adv_fraction");
    opts.seed = args.get_u64("seed");
    if (opts.adversarial_fraction > 0.0 && pool.empty() && !adversarial_path.empty())
        std::cerr << "warning: adversarial pool is empty; emitting random negatives only\n";

    const PromptTemplate tpl = pair_template_from(args);
    if (args.has("template")) input_paths.push_back(args.get("template"));

    const SynthResult result = synthesize(corpus.items, pool, opts);
    if (result.stats.short_dialogues_skipped > 0) {
        std::cerr << "warning: " << result.stats.short_dialogues_skipped
                  << " dialogues shorter than 2 utterances were not sampleable\n";
    }

    std::string lines;
    for (const auto& pair : result.pairs) {
        lines += serialize_training_pair(pair, tpl);
        lines += '\n';
    }
    write_text_file(out_path, lines);
    write_manifest(cfg, input_paths, {out_path}, 0);
    std::cerr << "synthesized " << result.stats.emitted << " pairs (" << result.stats.adversarial
              << " adversarial, " << result.stats.random << " random, "
              << result.stats.adversarial_fallbacks << " fallbacks) -> " << out_path << "\n";
    return kExitOk;
}

int run_correlate(const RunConfig& cfg) {
    const Args args(cfg);
    const std::string scores_path = args.get("scores");
    const std::string dataset_path = args.get("dataset");

    const auto scores = read_score_lines(scores_path);
    const auto dataset = load_meta_eval(dataset_path, load_options_from(args));
    warn_skipped(dataset_path, dataset.skipped);

    std::vector<std::pair<std::string, double>> human;
    human.reserve(dataset.items.size());
    for (const auto& instance : dataset.items)
        human.emplace_back(instance.conversation.id, instance.human_score);

    CorrelationOptions opts;
    opts.permutation = args.get_bool("permutation");
    opts.permutations = args.get_u64("permutations");
    opts.seed = args.get_u64("seed");
    const CorrelationReport report = correlate(scores, human, opts);

    const std::string out_path = args.get("out");
    write_text_file(out_path, serialize_correlation(report) + "\n");
    write_manifest(cfg, {scores_path, dataset_path}, {out_path}, 0);

    const std::pair<std::string, CorrelationReport> row{args.get_or("label", "dataset"), report};
    std::cout << format_correlation_table({&row, 1});
    return kExitOk;
}

int run_stability(const RunConfig& cfg) {
    const Args args(cfg);
    const std::string input_path = args.get("input");
    const std::string corpus_path = args.get("corpus");

    const auto dataset = load_meta_eval(input_path, load_options_from(args));
    warn_skipped(input_path, dataset.skipped);
    const auto corpus = load_dialogues(corpus_path, load_options_from(args));
    warn_skipped(corpus_path, corpus.skipped);

    const std::size_t runs = args.get_u64("runs");
    SplitMix64 seeder = stream_for(args.get_u64("seed"), RngRole::kStabilityRuns);
    std::vector<std::uint64_t> run_seeds;
    run_seeds.reserve(runs);
    for (std::size_t i = 0; i < runs; ++i) run_seeds.push_back(seeder.next());

    JudgeBundle bundle = build_judge(args);
    const PromptTemplate tpl = pair_template_from(args);

    ProtocolOptions opts;
    opts.n_comparisons = args.get_u64("n");
    opts.position = position_mode_from_string(args.get("position"));
    opts.workers = args.get_int("workers");

    const StabilityReport report =
        stability(bundle.judge(), tpl, dataset.items, corpus.items, run_seeds,
                  coefficient_from_string(args.get("coefficient")), opts);

    const std::string out_path = args.get("out");
    write_text_file(out_path, serialize_stability(report) + "\n");
    std::vector<std::string> input_paths{input_path, corpus_path};
    if (args.has("template")) input_paths.push_back(args.get("template"));
    write_manifest(cfg, input_paths, {out_path}, bundle.calls());

    std::vector<std::pair<std::string, CorrelationReport>> rows;
    for (std::size_t i = 0; i < report.per_run.size(); ++i)
        rows.emplace_back("run-" + std::to_string(i), report.per_run[i]);
    std::cout << format_correlation_table(rows);
    std::cout << to_string(report.coefficient) << " mu=" << report.mu
              << " sigma=" << report.sigma << " over " << report.runs << " runs\n";
    return kExitOk;
}

int run_bias_report(const RunConfig& cfg) {
    const Args args(cfg);
    const std::string input_path = args.get("input");
    std::vector<std::string> input_paths{input_path};

    const auto dataset = load_meta_eval(input_path, load_options_from(args));
    warn_skipped(input_path, dataset.skipped);
    std::vector<Conversation> targets;
    targets.reserve(dataset.items.size());
    for (const auto& instance : dataset.items) targets.push_back(instance.conversation);

    const ComparisonSet comparisons = resolve_comparisons(args, targets, input_paths);
    JudgeBundle bundle = build_judge(args);
    const PromptTemplate tpl = pair_template_from(args);
    if (args.has("template")) input_paths.push_back(args.get("template"));

    const PositionBiasReport report = position_bias_report(
        bundle.judge(), tpl, dataset.items, comparisons, args.get_int("workers"));

    const std::string out_path = args.get("out");
    write_text_file(out_path, serialize_position_bias(report) + "\n");
    write_manifest(cfg, input_paths, {out_path}, bundle.calls());

    const std::vector<std::pair<std::string, CorrelationReport>> rows{
        {"first", report.first}, {"second", report.second}, {"both", report.both}};
    std::cout << format_correlation_table(rows);
    std::cout << "gap r=" << report.gap_pearson << " rho=" << report.gap_spearman << "\n";
    return kExitOk;
}

int run_robustness(const RunConfig& cfg) {
    const Args args(cfg);
    const std::string input_path = args.get("input");
    const std::string mode_name = args.get("mode");
    RobustnessMode mode;
    if (mode_name == "paireval") mode = RobustnessMode::kPairEval;
    else if (mode_name == "directeval") mode = RobustnessMode::kDirectEval;
    else throw DataError("unknown robustness mode: " + mode_name);

    const auto instances = load_robustness(input_path, load_options_from(args));
    warn_skipped(input_path, instances.skipped);

    JudgeBundle bundle = build_judge(args);
    const PromptTemplate pair_tpl = pair_template_from(args);
    const PromptTemplate direct_tpl = direct_template_from(args);

    const RobustnessReport report = robustness_eval(instances.items, mode, bundle.judge(),
                                                    pair_tpl, direct_tpl, args.get_int("workers"));

    const std::string out_path = args.get("out");
    write_text_file(out_path, serialize_robustness(report) + "\n");
    std::vector<std::string> input_paths{input_path};
    if (args.has("template")) input_paths.push_back(args.get("template"));
    if (args.has("direct_template")) input_paths.push_back(args.get("direct_template"));
    write_manifest(cfg, input_paths, {out_path}, bundle.calls());

    for (const auto& [attack_type, attack] : report.by_attack) {
        std::cout << attack_type << ": " << attack.correct << "/" << attack.total << " = "
                  << attack.accuracy << "\n";
    }
    std::cout << "overall: " << report.overall.correct << "/" << report.overall.total << " = "
              << report.overall.accuracy << "\n";
    return kExitOk;
}

int run_bleu2(const RunConfig& cfg) {
    const Args args(cfg);
    const std::string input_path = args.get("input");
    const auto dataset = load_meta_eval(input_path, load_options_from(args));
    warn_skipped(input_path, dataset.skipped);

    std::string lines;
    for (const auto& instance : dataset.items) {
        if (!instance.reference) {
            throw DataError("instance '" + instance.conversation.id +
                            "' has no reference response; bleu2 is reference-based");
        }
        ordered_json line;
        line["id"] = instance.conversation.id;
        line["score"] = bleu2(instance.conversation.response, *instance.reference);
        lines += line.dump();
        lines += '\n';
    }
    const std::string out_path = args.get("out");
    write_text_file(out_path, lines);
    write_manifest(cfg, {input_path}, {out_path}, 0);
    std::cerr << "scored " << dataset.items.size() << " instances -> " << out_path << "\n";
    return kExitOk;
}

int run_plot_data(const RunConfig& cfg) {
    const Args args(cfg);
    const std::string scores_path = args.get("scores");
    const std::string dataset_path = args.get("dataset");

    const auto scores = read_score_lines(scores_path);
    const auto dataset = load_meta_eval(dataset_path, load_options_from(args));
    warn_skipped(dataset_path, dataset.skipped);

    const auto [metric, human] = align_with_dataset(scores, dataset.items);
    const PlotData data = plot_data(metric, human, args.get_u64("jitter_seed"));

    const std::string out_path = args.get("out");
    write_text_file(out_path, plot_data_csv(data));
    write_manifest(cfg, {scores_path, dataset_path}, {out_path}, 0);

    ordered_json fit;
    fit["slope"] = data.regression.slope;
    fit["intercept"] = data.regression.intercept;
    fit["n"] = data.human.size();
    std::cout << fit.dump() << "\n";
    return kExitOk;
}

int run_cache_compact(const RunConfig& cfg) {
    const Args args(cfg);
    VerdictCache cache(args.get("cache_dir"), args.get("backend_id"), args.get("model"));
    if (cache.corrupt_entries() > 0)
        std::cerr << "warning: dropping " << cache.corrupt_entries() << " corrupt entries\n";
    cache.compact();
    std::cerr << "compacted " << cache.path() << " to " << cache.size() << " entries\n";
    return kExitOk;
}

int run_rerun(const RunConfig& outer) {
    const Args args(outer);
    const std::string manifest_path = args.get("manifest_in");
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw DataError("cannot open manifest: " + manifest_path);
    const auto manifest = nlohmann::json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("command") ||
        !manifest.contains("args") || !manifest["args"].is_object())
        throw DataError("malformed manifest: " + manifest_path);

    RunConfig cfg;
    cfg.command = manifest["command"].get<std::string>();
    for (const auto& [key, value] : manifest["args"].items()) {
        if (!value.is_string()) throw DataError("malformed manifest args: " + manifest_path);
        cfg.args[key] = value.get<std::string>();
    }

    // Input drift is worth a loud warning, but the rerun itself decides
    // whether the data still parses.
    if (manifest.contains("inputs") && manifest["inputs"].is_object()) {
        for (const auto& [path, digest] : manifest["inputs"].items()) {
            try {
                if (hash_file(path) != digest.get<std::string>())
                    std::cerr << "warning: input changed since manifest was written: " << path
                              << "\n";
            } catch (const DataError&) {
                std::cerr << "warning: manifest input missing: " << path << "\n";
            }
        }
    }
    return execute(cfg);
}

// ---------------------------------------------------------------------------
// CLI11 surface
// ---------------------------------------------------------------------------

struct BackendFlags {
    std::string backend = "mock";
    std::string endpoint;
    std::string model;
    std::string api = "completions";
    std::string cache_dir;
    double epsilon_floor = 1e-6;
    double mock_sharpness = 10.0;
    int logprob_top_k = 5;
    int timeout_ms = 30000;
    int retries = 3;
    int max_inflight = 4;
    int workers = 1;
    bool insecure = false;
    bool lenient = false;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags) {
    cmd->add_option("--backend", flags.backend, "Judge backend")
        ->check(CLI::IsMember({"mock", "http"}))
        ->capture_default_str();
    cmd->add_option("--endpoint", flags.endpoint, "HTTP backend base URL");
    cmd->add_option("--model", flags.model, "Model name sent to the endpoint");
    cmd->add_option("--api", flags.api, "Wire protocol for the HTTP backend")
        ->check(CLI::IsMember({"completions", "chat"}))
        ->capture_default_str();
    cmd->add_option("--cache-dir", flags.cache_dir, "Verdict cache directory");
    cmd->add_option("--epsilon-floor", flags.epsilon_floor,
                    "Probability floor for missing label tokens")
        ->capture_default_str();
    cmd->add_option("--mock-sharpness", flags.mock_sharpness, "Logistic slope of the mock judge")
        ->capture_default_str();
    cmd->add_option("--logprob-top-k", flags.logprob_top_k, "Top logprobs requested per token")
        ->capture_default_str();
    cmd->add_option("--timeout-ms", flags.timeout_ms, "Per-request timeout")
        ->capture_default_str();
    cmd->add_option("--retries", flags.retries, "Max retries on transport errors and 429/5xx")
        ->capture_default_str();
    cmd->add_option("--max-inflight", flags.max_inflight, "Concurrent request cap")
        ->capture_default_str();
    cmd->add_option("--workers", flags.workers, "Concurrent scoring workers")
        ->capture_default_str();
    cmd->add_flag("--insecure", flags.insecure, "Skip TLS certificate verification");
    cmd->add_flag("--lenient", flags.lenient, "Skip malformed records with a warning");
}

void put_backend_args(RunConfig& cfg, const BackendFlags& flags) {
    cfg.args["backend"] = flags.backend;
    cfg.args["endpoint"] = flags.endpoint;
    cfg.args["model"] = flags.model;
    cfg.args["api"] = flags.api;
    cfg.args["cache_dir"] = flags.cache_dir;
    cfg.args["epsilon_floor"] = fmt_double(flags.epsilon_floor);
    cfg.args["mock_sharpness"] = fmt_double(flags.mock_sharpness);
    cfg.args["logprob_top_k"] = std::to_string(flags.logprob_top_k);
    cfg.args["timeout_ms"] = std::to_string(flags.timeout_ms);
    cfg.args["retries"] = std::to_string(flags.retries);
    cfg.args["max_inflight"] = std::to_string(flags.max_inflight);
    cfg.args["workers"] = std::to_string(flags.workers);
    cfg.args["insecure"] = fmt_bool(flags.insecure);
    cfg.args["lenient"] = fmt_bool(flags.lenient);
}

std::string default_manifest_path(const std::string& manifest, const std::string& out) {
    return manifest.empty() ? out + ".manifest.json" : manifest;
}

} // namespace

int execute(const RunConfig& cfg) {
    if (cfg.command == "score") return run_score(cfg);
    if (cfg.command == "synth") return run_synth(cfg);
    if (cfg.command == "correlate") return run_correlate(cfg);
    if (cfg.command == "stability") return run_stability(cfg);
    if (cfg.command == "bias-report") return run_bias_report(cfg);
    if (cfg.command == "robustness") return run_robustness(cfg);
    if (cfg.command == "bleu2") return run_bleu2(cfg);
    if (cfg.command == "plot-data") return run_plot_data(cfg);
    if (cfg.command == "cache-compact") return run_cache_compact(cfg);
    if (cfg.command == "rerun") return run_rerun(cfg);
    throw DataError("unknown command: " + cfg.command);
}

int run(int argc, const char* const* argv) {
    CLI::App app{"paireval: pairwise-comparison dialogue evaluation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key = value configuration file");
    app.set_version_flag("--version", std::string("paireval ") + kVersion);

    RunConfig cfg;

    // --- score ---
    auto* score = app.add_subcommand("score", "Score conversations with paireval or directeval");
    struct {
        std::string metric, input, out, manifest, tpl;
        std::string comparisons, comparisons_from, corpus, position = "both";
        std::uint64_t n = 3, seed = 0;
        bool exhaustive = false, normalize = false;
        BackendFlags backend;
    } sc;
    score->add_option("metric", sc.metric, "Metric to run")
        ->required()
        ->check(CLI::IsMember({"paireval", "directeval"}));
    score->add_option("--input", sc.input, "Targets (canonical conversation lines)")->required();
    score->add_option("--out", sc.out, "Report lines output path")->required();
    score->add_option("--template", sc.tpl, "Prompt template path");
    score->add_option("--n", sc.n, "Number of comparison examples")->capture_default_str();
    score->add_option("--seed", sc.seed, "Seed for all sampling in this run")
        ->capture_default_str();
    score->add_option("--comparisons", sc.comparisons, "Explicit comparison-example file");
    score->add_option("--comparisons-from", sc.comparisons_from, "Sample comparisons from")
        ->check(CLI::IsMember({"corpus", "test"}));
    score->add_option("--corpus", sc.corpus, "Dialogue corpus for comparison sampling");
    score->add_option("--position", sc.position, "Target slot handling")
        ->check(CLI::IsMember({"both", "first", "second"}))
        ->capture_default_str();
    score->add_flag("--exhaustive", sc.exhaustive, "Compare every target against every other");
    score->add_flag("--normalize", sc.normalize,
                    "directeval: normalize P(positive) over both labels");
    score->add_option("--manifest", sc.manifest, "Manifest path (default: <out>.manifest.json)");
    add_backend_flags(score, sc.backend);
    score->callback([&] {
        cfg.command = "score";
        cfg.args["metric"] = sc.metric;
        cfg.args["input"] = sc.input;
        cfg.args["out"] = sc.out;
        cfg.args["template"] = sc.tpl;
        cfg.args["n"] = std::to_string(sc.n);
        cfg.args["seed"] = std::to_string(sc.seed);
        cfg.args["comparisons"] = sc.comparisons;
        cfg.args["comparisons_from"] = sc.comparisons_from;
        cfg.args["corpus"] = sc.corpus;
        cfg.args["position"] = sc.position;
        cfg.args["exhaustive"] = fmt_bool(sc.exhaustive);
        cfg.args["normalize"] = fmt_bool(sc.normalize);
        cfg.args["manifest"] = default_manifest_path(sc.manifest, sc.out);
        put_backend_args(cfg, sc.backend);
    });

    // --- synth ---
    auto* synth = app.add_subcommand("synth", "Synthesize pairwise fine-tuning data");
    struct {
        std::string corpus, adversarial, out, manifest, tpl;
        std::uint64_t count = 1, seed = 0;
        double adv_fraction = 0.5;
        bool lenient = false;
    } sy;
    synth->add_option("--corpus", sy.corpus, "Dialogue corpus (canonical dialogue lines)")
        ->required();
    synth->add_option("--adversarial", sy.adversarial, "Adversarial-response records");
    synth->add_option("--count", sy.count, "Number of pairs to emit")->required();
    synth->add_option("--adv-fraction", sy.adv_fraction,
                      "Fraction of negatives drawn from the adversarial pool")
        ->capture_default_str();
    synth->add_option("--seed", sy.seed, "Generation seed")->capture_default_str();
    synth->add_option("--template", sy.tpl, "Pairwise prompt template path");
    synth->add_option("--out", sy.out, "Training-pair export path")->required();
    synth->add_option("--manifest", sy.manifest, "Manifest path (default: <out>.manifest.json)");
    synth->add_flag("--lenient", sy.lenient, "Skip malformed records with a warning");
    synth->callback([&] {
        cfg.command = "synth";
        cfg.args["corpus"] = sy.corpus;
        cfg.args["adversarial"] = sy.adversarial;
        cfg.args["count"] = std::to_string(sy.count);
        cfg.args["adv_fraction"] = fmt_double(sy.adv_fraction);
        cfg.args["seed"] = std::to_string(sy.seed);
        cfg.args["template"] = sy.tpl;
        cfg.args["out"] = sy.out;
        cfg.args["manifest"] = default_manifest_path(sy.manifest, sy.out);
        cfg.args["lenient"] = fmt_bool(sy.lenient);
    });

    // --- correlate ---
    auto* correlate_cmd =
        app.add_subcommand("correlate", "Correlate metric scores with human judgments");
    struct {
        std::string scores, dataset, out, manifest, label = "dataset";
        bool permutation = false, lenient = false;
        std::uint64_t permutations = 10000, seed = 0;
    } co;
    correlate_cmd->add_option("--scores", co.scores, "Score report lines")->required();
    correlate_cmd->add_option("--dataset", co.dataset, "Meta-eval dataset lines")->required();
    correlate_cmd->add_option("--out", co.out, "Correlation report output path")->required();
    correlate_cmd->add_option("--label", co.label, "Row label in the printed table")
        ->capture_default_str();
    correlate_cmd->add_flag("--permutation", co.permutation,
                            "Seeded permutation test instead of the t-approximation");
    correlate_cmd->add_option("--permutations", co.permutations, "Permutation count")
        ->capture_default_str();
    correlate_cmd->add_option("--seed", co.seed, "Permutation seed")->capture_default_str();
    correlate_cmd->add_option("--manifest", co.manifest,
                              "Manifest path (default: <out>.manifest.json)");
    correlate_cmd->add_flag("--lenient", co.lenient, "Skip malformed records with a warning");
    correlate_cmd->callback([&] {
        cfg.command = "correlate";
        cfg.args["scores"] = co.scores;
        cfg.args["dataset"] = co.dataset;
        cfg.args["out"] = co.out;
        cfg.args["label"] = co.label;
        cfg.args["permutation"] = fmt_bool(co.permutation);
        cfg.args["permutations"] = std::to_string(co.permutations);
        cfg.args["seed"] = std::to_string(co.seed);
        cfg.args["manifest"] = default_manifest_path(co.manifest, co.out);
        cfg.args["lenient"] = fmt_bool(co.lenient);
    });

    // --- stability ---
    auto* stability_cmd =
        app.add_subcommand("stability", "Multi-run stability of the correlation");
    struct {
        std::string input, corpus, out, manifest, tpl, coefficient = "spearman",
                            position = "both";
        std::uint64_t runs = 15, n = 1, seed = 0;
        BackendFlags backend;
    } st;
    stability_cmd->add_option("--input", st.input, "Meta-eval dataset lines")->required();
    stability_cmd->add_option("--corpus", st.corpus, "Dialogue corpus for comparison sampling")
        ->required();
    stability_cmd->add_option("--runs", st.runs, "Number of runs")->capture_default_str();
    stability_cmd->add_option("--n", st.n, "Comparison examples per run")->capture_default_str();
    stability_cmd->add_option("--seed", st.seed, "Base seed; per-run seeds derive from it")
        ->capture_default_str();
    stability_cmd->add_option("--coefficient", st.coefficient, "Coefficient summarized by mu/sigma")
        ->check(CLI::IsMember({"pearson", "spearman"}))
        ->capture_default_str();
    stability_cmd->add_option("--position", st.position, "Target slot handling")
        ->check(CLI::IsMember({"both", "first", "second"}))
        ->capture_default_str();
    stability_cmd->add_option("--template", st.tpl, "Pairwise prompt template path");
    stability_cmd->add_option("--out", st.out, "Stability report output path")->required();
    stability_cmd->add_option("--manifest", st.manifest,
                              "Manifest path (default: <out>.manifest.json)");
    add_backend_flags(stability_cmd, st.backend);
    stability_cmd->callback([&] {
        cfg.command = "stability";
        cfg.args["input"] = st.input;
        cfg.args["corpus"] = st.corpus;
        cfg.args["runs"] = std::to_string(st.runs);
        cfg.args["n"] = std::to_string(st.n);
        cfg.args["seed"] = std::to_string(st.seed);
        cfg.args["coefficient"] = st.coefficient;
        cfg.args["position"] = st.position;
        cfg.args["template"] = st.tpl;
        cfg.args["out"] = st.out;
        cfg.args["manifest"] = default_manifest_path(st.manifest, st.out);
        put_backend_args(cfg, st.backend);
    });

    // --- bias-report ---
    auto* bias = app.add_subcommand("bias-report", "Position-bias analysis (first/second/both)");
    struct {
        std::string input, out, manifest, tpl;
        std::string comparisons, comparisons_from, corpus;
        std::uint64_t n = 1, seed = 0;
        BackendFlags backend;
    } bi;
    bias->add_option("--input", bi.input, "Meta-eval dataset lines")->required();
    bias->add_option("--comparisons", bi.comparisons, "Explicit comparison-example file");
    bias->add_option("--comparisons-from", bi.comparisons_from, "Sample comparisons from")
        ->check(CLI::IsMember({"corpus", "test"}));
    bias->add_option("--corpus", bi.corpus, "Dialogue corpus for comparison sampling");
    bias->add_option("--n", bi.n, "Number of comparison examples")->capture_default_str();
    bias->add_option("--seed", bi.seed, "Sampling seed")->capture_default_str();
    bias->add_option("--template", bi.tpl, "Pairwise prompt template path");
    bias->add_option("--out", bi.out, "Bias report output path")->required();
    bias->add_option("--manifest", bi.manifest, "Manifest path (default: <out>.manifest.json)");
    add_backend_flags(bias, bi.backend);
    bias->callback([&] {
        cfg.command = "bias-report";
        cfg.args["input"] = bi.input;
        cfg.args["comparisons"] = bi.comparisons;
        cfg.args["comparisons_from"] = bi.comparisons_from;
        cfg.args["corpus"] = bi.corpus;
        cfg.args["n"] = std::to_string(bi.n);
        cfg.args["seed"] = std::to_string(bi.seed);
        cfg.args["template"] = bi.tpl;
        cfg.args["out"] = bi.out;
        cfg.args["manifest"] = default_manifest_path(bi.manifest, bi.out);
        put_backend_args(cfg, bi.backend);
    });

    // --- robustness ---
    auto* robust = app.add_subcommand("robustness", "Original-vs-corrupted detection accuracy");
    struct {
        std::string mode, input, out, manifest, tpl, direct_tpl;
        BackendFlags backend;
    } ro;
    robust->add_option("--mode", ro.mode, "Evaluation mode")
        ->required()
        ->check(CLI::IsMember({"paireval", "directeval"}));
    robust->add_option("--input", ro.input, "Robustness instances")->required();
    robust->add_option("--template", ro.tpl, "Pairwise prompt template path");
    robust->add_option("--direct-template", ro.direct_tpl, "Direct prompt template path");
    robust->add_option("--out", ro.out, "Robustness report output path")->required();
    robust->add_option("--manifest", ro.manifest, "Manifest path (default: <out>.manifest.json)");
    add_backend_flags(robust, ro.backend);
    robust->callback([&] {
        cfg.command = "robustness";
        cfg.args["mode"] = ro.mode;
        cfg.args["input"] = ro.input;
        cfg.args["template"] = ro.tpl;
        cfg.args["direct_template"] = ro.direct_tpl;
        cfg.args["out"] = ro.out;
        cfg.args["manifest"] = default_manifest_path(ro.manifest, ro.out);
        put_backend_args(cfg, ro.backend);
    });

    // --- bleu2 ---
    auto* bleu = app.add_subcommand("bleu2", "Sentence BLEU-2 against reference responses");
    struct {
        std::string input, out, manifest;
        bool lenient = false;
    } bl;
    bleu->add_option("--input", bl.input, "Meta-eval dataset lines (needs references)")
        ->required();
    bleu->add_option("--out", bl.out, "Score lines output path")->required();
    bleu->add_option("--manifest", bl.manifest, "Manifest path (default: <out>.manifest.json)");
    bleu->add_flag("--lenient", bl.lenient, "Skip malformed records with a warning");
    bleu->callback([&] {
        cfg.command = "bleu2";
        cfg.args["input"] = bl.input;
        cfg.args["out"] = bl.out;
        cfg.args["manifest"] = default_manifest_path(bl.manifest, bl.out);
        cfg.args["lenient"] = fmt_bool(bl.lenient);
    });

    // --- plot-data ---
    auto* plot = app.add_subcommand("plot-data", "Scatter CSV plus linear regression");
    struct {
        std::string scores, dataset, out, manifest;
        std::uint64_t jitter_seed = 0;
        bool lenient = false;
    } pl;
    plot->add_option("--scores", pl.scores, "Score report lines")->required();
    plot->add_option("--dataset", pl.dataset, "Meta-eval dataset lines")->required();
    plot->add_option("--jitter-seed", pl.jitter_seed, "Seed for the gaussian jitter column")
        ->capture_default_str();
    plot->add_option("--out", pl.out, "CSV output path")->required();
    plot->add_option("--manifest", pl.manifest, "Manifest path (default: <out>.manifest.json)");
    plot->add_flag("--lenient", pl.lenient, "Skip malformed records with a warning");
    plot->callback([&] {
        cfg.command = "plot-data";
        cfg.args["scores"] = pl.scores;
        cfg.args["dataset"] = pl.dataset;
        cfg.args["jitter_seed"] = std::to_string(pl.jitter_seed);
        cfg.args["out"] = pl.out;
        cfg.args["manifest"] = default_manifest_path(pl.manifest, pl.out);
        cfg.args["lenient"] = fmt_bool(pl.lenient);
    });

    // --- cache-compact ---
    auto* compact = app.add_subcommand("cache-compact", "Rewrite a verdict log without duplicates");
    struct {
        std::string cache_dir, backend_id = "http", model = "default";
    } cc;
    compact->add_option("--cache-dir", cc.cache_dir, "Verdict cache directory")->required();
    compact->add_option("--backend-id", cc.backend_id, "Backend id of the log")
        ->capture_default_str();
    compact->add_option("--model", cc.model, "Model name of the log")->capture_default_str();
    compact->callback([&] {
        cfg.command = "cache-compact";
        cfg.args["cache_dir"] = cc.cache_dir;
        cfg.args["backend_id"] = cc.backend_id;
        cfg.args["model"] = cc.model;
    });

    // --- rerun ---
    auto* rerun = app.add_subcommand("rerun", "Re-execute a run from its manifest alone");
    struct {
        std::string manifest;
    } rr;
    rerun->add_option("--manifest", rr.manifest, "Manifest written by a previous run")->required();
    rerun->callback([&] {
        cfg.command = "rerun";
        cfg.args["manifest_in"] = rr.manifest;
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        return execute(cfg);
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackendError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
}

} // namespace paireval::cli
