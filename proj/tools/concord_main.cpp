// concord: command-line driver for dataset validation, baseline relation
// scoring, relational inference, self-training label generation, synthetic
// benchmark generation, and evaluation.
//
// Exit codes: 0 success, 1 usage error, 2 schema or validation error,
// 3 infeasible under --on-infeasible error.

#include <cstdint>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "concord/concord.hpp"

namespace {

struct DatasetInput {
    std::string path;
    std::string format = "native";  // native | multirc | semeval
};

void add_dataset_flags(CLI::App* cmd, DatasetInput& input) {
    cmd->add_option("--dataset", input.path, "dataset file")->required();
    cmd->add_option("--format", input.format, "dataset format")
        ->check(CLI::IsMember({"native", "multirc", "semeval"}))
        ->capture_default_str();
}

concord::ParsedDataset load_parsed(const DatasetInput& input) {
    if (input.format == "multirc") return concord::parse_multirc(input.path);
    if (input.format == "semeval") return concord::parse_semeval(input.path);
    concord::ParsedDataset parsed;
    parsed.dataset = concord::read_dataset(input.path);
    parsed.report = concord::validate_dataset(parsed.dataset);
    for (const concord::Choice& c : parsed.dataset.choices) {
        if (!c.gold.has_value()) ++parsed.missing_gold;
    }
    return parsed;
}

/// Loads and refuses datasets with referential violations.
concord::Dataset load_dataset(const DatasetInput& input) {
    concord::ParsedDataset parsed = load_parsed(input);
    if (!parsed.report.ok()) {
        const concord::ValidationIssue& first = parsed.report.violations.front();
        throw concord::SchemaError(input.path + ": " + first.code + " (" + first.subject + "): " +
                                   first.message + " [" +
                                   std::to_string(parsed.report.violations.size()) +
                                   " violation(s) total]");
    }
    return std::move(parsed.dataset);
}

concord::GroupingMode parse_mode(const std::string& mode) {
    return mode == "cross-question" ? concord::GroupingMode::CrossQuestion
                                    : concord::GroupingMode::WithinQuestion;
}

concord::ExactlyOnePolicy parse_exactly_one(const std::string& policy) {
    if (policy == "on") return concord::ExactlyOnePolicy::On;
    if (policy == "off") return concord::ExactlyOnePolicy::Off;
    return concord::ExactlyOnePolicy::Auto;
}

unsigned parse_threads(const std::string& threads) {
    if (threads == "auto") {
        const unsigned n = std::thread::hardware_concurrency();
        return n == 0 ? 1 : n;
    }
    int value = 0;
    try {
        value = std::stoi(threads);
    } catch (...) {
        throw concord::DomainError("--threads must be a positive integer or 'auto'");
    }
    if (value <= 0) throw concord::DomainError("--threads must be a positive integer or 'auto'");
    return static_cast<unsigned>(value);
}

std::string render_issues(const std::vector<concord::ValidationIssue>& issues) {
    std::string out = "[";
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i > 0) out += ", ";
        out += "{\"code\": " + concord::json_quote(issues[i].code) +
               ", \"subject\": " + concord::json_quote(issues[i].subject) +
               ", \"message\": " + concord::json_quote(issues[i].message) + "}";
    }
    out += "]";
    return out;
}

std::string render_validation(const concord::ParsedDataset& parsed) {
    const concord::ValidationReport& r = parsed.report;
    std::string out = "{\n";
    out += "  \"paragraphs\": " + std::to_string(r.paragraph_count) + ",\n";
    out += "  \"questions\": " + std::to_string(r.question_count) + ",\n";
    out += "  \"choices\": " + std::to_string(r.choice_count) + ",\n";
    out += "  \"missing_gold\": " + std::to_string(parsed.missing_gold) + ",\n";
    out += "  \"violations\": " + render_issues(r.violations) + ",\n";
    out += "  \"warnings\": " + render_issues(r.warnings) + "\n";
    out += "}\n";
    return out;
}

// ---------------------------------------------------------------------------
// subcommands

int run_validate(const DatasetInput& input, const std::string& out_path) {
    const concord::ParsedDataset parsed = load_parsed(input);
    std::cout << render_validation(parsed);
    if (!parsed.report.ok()) return 2;
    if (!out_path.empty()) concord::write_dataset(parsed.dataset, out_path);
    return 0;
}

int run_baseline_relations(const DatasetInput& input, const std::string& mode, double threshold,
                           const std::string& out_path) {
    const concord::Dataset dataset = load_dataset(input);
    const std::vector<concord::InferenceGroup> groups =
        concord::build_groups(dataset, parse_mode(mode), concord::ExactlyOnePolicy::Off);
    const std::vector<concord::RelationRecord> relations =
        concord::baseline_relations(dataset, groups, threshold);
    concord::write_relations(relations, out_path);
    return 0;
}

int run_infer(const DatasetInput& input, const std::string& scores_path,
              const std::string& relations_path, const std::string& mode,
              const std::string& constraint, double lambda, double tau,
              const std::string& exactly_one, const std::string& on_infeasible,
              const std::string& threads, const std::string& out_path) {
    const concord::Dataset dataset = load_dataset(input);
    const std::vector<concord::ScoreRecord> scores = concord::read_scores(scores_path);
    const std::vector<concord::RelationRecord> relations = concord::read_relations(relations_path);

    concord::SolverConfig config;
    config.constraint_mode =
        constraint == "hard" ? concord::ConstraintMode::Hard : concord::ConstraintMode::Soft;
    config.lambda = lambda;
    config.tau_rel = tau;
    config.on_infeasible = on_infeasible == "error" ? concord::OnInfeasible::Error
                                                    : concord::OnInfeasible::FallbackSoft;
    if (config.lambda < 0.0) throw concord::DomainError("--lambda must be non-negative");
    if (config.tau_rel < 0.0 || config.tau_rel > 1.0) {
        throw concord::DomainError("--tau must be in [0, 1]");
    }

    const concord::InferReport report =
        concord::infer_dataset(dataset, scores, relations, parse_mode(mode), config,
                               parse_exactly_one(exactly_one), parse_threads(threads));
    concord::write_predictions(report.predictions, out_path);
    std::cerr << "solved " << report.groups_total << " group(s), " << report.groups_fell_back
              << " fell back to soft mode\n";
    return 0;
}

int run_selftrain(const DatasetInput& input, const std::string& mode,
                  const std::string& relations_path, const std::string& out_path,
                  const std::string& report_path) {
    const concord::Dataset dataset = load_dataset(input);
    std::vector<concord::LabeledPair> pairs;
    std::string report_doc;
    if (relations_path.empty()) {
        pairs = concord::gold_pairs(dataset, parse_mode(mode));
    } else {
        const std::vector<concord::RelationRecord> predicted =
            concord::read_relations(relations_path);
        pairs = concord::filter_labels(predicted, concord::gold_map(dataset));
        if (!report_path.empty()) {
            const concord::RelationAccuracyReport accuracy = concord::relation_accuracy(
                predicted, concord::gold_pairs(dataset, parse_mode(mode)));
            report_doc = concord::render_relation_accuracy(accuracy);
        }
    }
    concord::write_labeled_pairs(pairs, out_path);
    if (!report_doc.empty()) concord::detail::write_text_file(report_path, report_doc);
    return 0;
}

int run_eval(const DatasetInput& input, const std::string& predictions_path,
             const std::string& predictions_b_path, bool uncorrected, const std::string& out_path) {
    const concord::Dataset dataset = load_dataset(input);
    const std::vector<concord::PredictionRecord> predictions =
        concord::read_predictions(predictions_path);
    std::vector<concord::PredictionRecord> predictions_b;
    const bool compare = !predictions_b_path.empty();
    if (compare) predictions_b = concord::read_predictions(predictions_b_path);

    const concord::EvalReport report = concord::build_eval_report(
        dataset, predictions, compare ? &predictions_b : nullptr, !uncorrected);
    const std::string doc = concord::render_eval_report(report) + "\n";
    for (const std::string& warning : report.warnings) std::cerr << "warning: " << warning << "\n";
    std::cout << doc;
    if (!out_path.empty()) concord::detail::write_text_file(out_path, doc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"logical-consistency inference over multiple-choice answers"};
    app.require_subcommand(1);

    // validate
    DatasetInput validate_input;
    std::string validate_out;
    CLI::App* validate = app.add_subcommand("validate", "check a dataset and print its report");
    add_dataset_flags(validate, validate_input);
    validate->add_option("--out", validate_out, "write the normalized dataset document here");

    // baseline-relations
    DatasetInput baseline_input;
    std::string baseline_mode = "within-question";
    double baseline_threshold = 0.5;
    std::string baseline_out;
    CLI::App* baseline =
        app.add_subcommand("baseline-relations", "score in-group choice pairs lexically");
    add_dataset_flags(baseline, baseline_input);
    baseline->add_option("--mode", baseline_mode, "grouping mode")
        ->check(CLI::IsMember({"within-question", "cross-question"}))
        ->capture_default_str();
    baseline->add_option("--threshold", baseline_threshold, "token-overlap threshold")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    baseline->add_option("--out", baseline_out, "relations output file")->required();

    // infer
    DatasetInput infer_input;
    std::string infer_scores, infer_relations, infer_out;
    std::string infer_mode = "within-question";
    std::string infer_constraint = "soft";
    double infer_lambda = 1.0;
    double infer_tau = 0.5;
    std::string infer_exactly_one = "auto";
    std::string infer_on_infeasible = "fallback-soft";
    std::string infer_threads = "1";
    CLI::App* infer = app.add_subcommand("infer", "relational inference over choice scores");
    add_dataset_flags(infer, infer_input);
    infer->add_option("--scores", infer_scores, "scores file")->required();
    infer->add_option("--relations", infer_relations, "relations file")->required();
    infer->add_option("--mode", infer_mode, "grouping mode")
        ->check(CLI::IsMember({"within-question", "cross-question"}))
        ->capture_default_str();
    infer->add_option("--constraint", infer_constraint, "constraint mode")
        ->check(CLI::IsMember({"soft", "hard"}))
        ->capture_default_str();
    infer->add_option("--lambda", infer_lambda, "soft-rule scale")->capture_default_str();
    infer->add_option("--tau", infer_tau, "relation-confidence threshold")->capture_default_str();
    infer->add_option("--exactly-one", infer_exactly_one, "exactly-one block policy")
        ->check(CLI::IsMember({"auto", "on", "off"}))
        ->capture_default_str();
    infer->add_option("--on-infeasible", infer_on_infeasible, "hard-mode infeasibility handling")
        ->check(CLI::IsMember({"error", "fallback-soft"}))
        ->capture_default_str();
    infer->add_option("--threads", infer_threads, "worker threads (positive integer or 'auto')")
        ->capture_default_str();
    infer->add_option("--out", infer_out, "predictions output file")->required();

    // selftrain
    DatasetInput selftrain_input;
    std::string selftrain_mode = "within-question";
    std::string selftrain_relations, selftrain_out, selftrain_report;
    CLI::App* selftrain =
        app.add_subcommand("selftrain", "generate entail/contradict pair labels");
    add_dataset_flags(selftrain, selftrain_input);
    selftrain->add_option("--mode", selftrain_mode, "grouping mode")
        ->check(CLI::IsMember({"within-question", "cross-question"}))
        ->capture_default_str();
    selftrain->add_option("--relations", selftrain_relations,
                          "predicted relations to filter (gold-only when omitted)");
    selftrain->add_option("--out", selftrain_out, "labeled-pairs output file")->required();
    selftrain
        ->add_option("--accuracy-report", selftrain_report,
                     "write relation accuracy against gold pair labels here")
        ->needs(selftrain->get_option("--relations"));

    // synth
    std::string synth_config_path, synth_out_dir;
    std::uint64_t synth_groups = 1, synth_questions = 1, synth_choices = 2, synth_seed = 0;
    double synth_p_true = 0.5, synth_density = 0.0, synth_eps = 0.0, synth_delta = 0.1,
           synth_rho = 0.0;
    std::string synth_mode = "within-question";
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic bundle");
    synth->add_option("--config", synth_config_path, "JSON config document (flags override)");
    synth->add_option("--groups", synth_groups, "paragraph count")->capture_default_str();
    synth->add_option("--questions", synth_questions, "questions per paragraph")
        ->capture_default_str();
    synth->add_option("--choices", synth_choices, "choices per question")->capture_default_str();
    synth->add_option("--p-true", synth_p_true, "gold prior")->capture_default_str();
    synth->add_option("--density", synth_density, "relation density")->capture_default_str();
    synth->add_option("--eps", synth_eps, "score noise")->capture_default_str();
    synth->add_option("--delta", synth_delta, "score margin")->capture_default_str();
    synth->add_option("--rho", synth_rho, "relation noise")->capture_default_str();
    synth->add_option("--mode", synth_mode, "grouping mode")
        ->check(CLI::IsMember({"within-question", "cross-question"}))
        ->capture_default_str();
    synth->add_option("--seed", synth_seed, "generator seed")->capture_default_str();
    synth->add_option("--out-dir", synth_out_dir, "output directory")->required();

    // eval
    DatasetInput eval_input;
    std::string eval_predictions, eval_predictions_b, eval_out;
    bool eval_uncorrected = false;
    CLI::App* eval = app.add_subcommand("eval", "evaluate predictions against gold");
    add_dataset_flags(eval, eval_input);
    eval->add_option("--predictions", eval_predictions, "predictions file")->required();
    eval->add_option("--predictions-b", eval_predictions_b,
                     "second predictions file for McNemar comparison");
    eval->add_flag("--uncorrected", eval_uncorrected, "drop the continuity correction");
    eval->add_option("--out", eval_out, "also write the report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (validate->parsed()) return run_validate(validate_input, validate_out);
        if (baseline->parsed()) {
            return run_baseline_relations(baseline_input, baseline_mode, baseline_threshold,
                                          baseline_out);
        }
        if (infer->parsed()) {
            return run_infer(infer_input, infer_scores, infer_relations, infer_mode,
                             infer_constraint, infer_lambda, infer_tau, infer_exactly_one,
                             infer_on_infeasible, infer_threads, infer_out);
        }
        if (selftrain->parsed()) {
            return run_selftrain(selftrain_input, selftrain_mode, selftrain_relations,
                                 selftrain_out, selftrain_report);
        }
        if (synth->parsed()) {
            concord::SynthConfig config;
            if (!synth_config_path.empty()) config = concord::parse_synth_config(synth_config_path);
            if (synth->count("--groups") > 0) config.groups = synth_groups;
            if (synth->count("--questions") > 0) config.questions_per_group = synth_questions;
            if (synth->count("--choices") > 0) config.choices_per_question = synth_choices;
            if (synth->count("--p-true") > 0) config.p_true = synth_p_true;
            if (synth->count("--density") > 0) config.relation_density = synth_density;
            if (synth->count("--eps") > 0) config.eps = synth_eps;
            if (synth->count("--delta") > 0) config.delta = synth_delta;
            if (synth->count("--rho") > 0) config.rho = synth_rho;
            if (synth->count("--mode") > 0) config.mode = parse_mode(synth_mode);
            if (synth->count("--seed") > 0) config.seed = synth_seed;
            const concord::SynthBundle bundle = concord::generate(config);
            concord::write_bundle(bundle, config, synth_out_dir);
            return 0;
        }
        if (eval->parsed()) {
            return run_eval(eval_input, eval_predictions, eval_predictions_b, eval_uncorrected,
                            eval_out);
        }
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const concord::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const concord::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const concord::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const concord::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
