// rwpm command-line front end.
//
// Exit codes: 0 success, 1 failed --assert-faster check or internal error,
// 2 input format / parameter error, 3 dimension / partition / empty-class
// error, 4 numerical error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rwpm/rwpm.hpp"

namespace {

using namespace rwpm;

struct PipelineFlags {
    std::string config_path;
    double alpha = kDefaultAlpha;
    double tau = kDefaultTemperature;
    std::size_t iters = kDefaultIterations;
    std::size_t partition = kDefaultPartitionMask;
    std::size_t knn = 0;
    bool closed_form = false;
    std::string score_fn = "energy";
    std::string activation = "sigmoid";
    std::string calibrate = "auto";
    bool renormalize = false;
    double tolerance = 0.0;
    unsigned threads = 1;

    CLI::Option* o_alpha = nullptr;
    CLI::Option* o_tau = nullptr;
    CLI::Option* o_iters = nullptr;
    CLI::Option* o_partition = nullptr;
    CLI::Option* o_knn = nullptr;
    CLI::Option* o_closed = nullptr;
    CLI::Option* o_score = nullptr;
    CLI::Option* o_activation = nullptr;
    CLI::Option* o_calibrate = nullptr;
    CLI::Option* o_renorm = nullptr;
    CLI::Option* o_tol = nullptr;
    CLI::Option* o_threads = nullptr;

    void add_diffusion(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value pipeline config; flags override it");
        o_alpha = cmd->add_option("--alpha", alpha, "continue probability of the walk");
        o_tau = cmd->add_option("--tau", tau, "softmax temperature of the transition graph");
        o_iters = cmd->add_option("--iters", iters, "iteration count T");
        o_partition = cmd->add_option("--partition", partition, "sub-maps per axis n");
        o_knn = cmd->add_option("--knn", knn, "keep only the k strongest edges per pixel (0 = softmax graph)");
        o_closed = cmd->add_flag("--closed-form", closed_form, "solve the walk in closed form instead of iterating");
        o_renorm = cmd->add_flag("--renormalize", renormalize, "l2-normalize refined embeddings");
        o_tol = cmd->add_option("--tol", tolerance, "stop iterating once the step falls below this (0 = never)");
        o_threads = cmd->add_option("--threads", threads, "worker cap; output does not depend on it");
    }
    void add_scoring(CLI::App* cmd) {
        o_score = cmd->add_option("--score-fn", score_fn, "energy | rba | one_minus_max");
        o_activation = cmd->add_option("--activation", activation, "one_minus_max activation: sigmoid | softmax");
    }
    void add_calibration(CLI::App* cmd) {
        o_calibrate = cmd->add_option("--calibrate", calibrate, "auto | off | multiplicative | additive");
    }

    PipelineConfig build() const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg.apply_key_values(read_key_value_file(config_path));
        auto given = [](const CLI::Option* o) { return o != nullptr && o->count() > 0; };
        if (given(o_alpha)) cfg.alpha = alpha;
        if (given(o_tau)) cfg.tau = tau;
        if (given(o_iters)) cfg.iterations = iters;
        if (given(o_partition)) cfg.partition = partition;
        if (given(o_knn)) {
            cfg.knn = knn;
            cfg.graph = knn > 0 ? GraphMode::topk : GraphMode::softmax;
        }
        if (given(o_closed)) cfg.solver = closed_form ? Solver::closed_form : Solver::iterative;
        if (given(o_score)) cfg.scoring.kind = parse_score_kind(score_fn);
        if (given(o_activation)) cfg.scoring.activation = parse_activation(activation);
        if (given(o_calibrate)) {
            if (calibrate == "auto") cfg.calibration.reset();
            else cfg.calibration = parse_calibration_mode(calibrate);
        }
        if (given(o_renorm)) cfg.renormalize = renormalize;
        if (given(o_tol)) cfg.tolerance = tolerance;
        if (given(o_threads)) cfg.threads = threads;
        cfg.validate();
        return cfg;
    }
};

LinearClassifier load_classifier(const std::string& weights, const std::string& bias) {
    std::optional<Tensor> b;
    if (!bias.empty()) b = read_tensor_file(bias);
    return LinearClassifier::from_tensors(read_tensor_file(weights), b);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
}

int report(const std::exception& e, int code) {
    std::cerr << "rwpm: " << e.what() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-walk refinement of pixel embeddings for anomaly segmentation"};
    app.require_subcommand(1);

    // process
    PipelineFlags pf;
    std::string p_emb, p_cls, p_bias, p_labels, p_out, p_manifest, p_refined, p_calib;
    auto* process = app.add_subcommand("process", "split, diffuse, score, calibrate and assemble");
    process->add_option("--embeddings", p_emb, "embedding tensor [d, H, W]")->required();
    process->add_option("--classifier", p_cls, "classifier weights [K, d]")->required();
    process->add_option("--bias", p_bias, "classifier bias [K]");
    process->add_option("--labels", p_labels, "label tensor [H, W]; prints metrics when given");
    process->add_option("--out", p_out, "output score tensor [H, W]")->required();
    process->add_option("--manifest", p_manifest, "run manifest path (default: <out>.manifest.txt)");
    process->add_option("--dump-refined", p_refined, "also write the refined embedding tensor");
    process->add_option("--calibration-report", p_calib, "write the calibration report here");
    pf.add_diffusion(process);
    pf.add_scoring(process);
    pf.add_calibration(process);

    // refine
    PipelineFlags rf;
    std::string r_emb, r_out;
    auto* refine = app.add_subcommand("refine", "diffusion only; writes refined embeddings");
    refine->add_option("--embeddings", r_emb, "embedding tensor [d, H, W]")->required();
    refine->add_option("--out", r_out, "refined embedding tensor")->required();
    rf.add_diffusion(refine);

    // score
    PipelineFlags sf;
    std::string s_emb, s_cls, s_bias, s_out;
    auto* score = app.add_subcommand("score", "anomaly scores from an embedding tensor");
    score->add_option("--embeddings", s_emb, "embedding tensor [d, H, W]")->required();
    score->add_option("--classifier", s_cls, "classifier weights [K, d]")->required();
    score->add_option("--bias", s_bias, "classifier bias [K]");
    score->add_option("--out", s_out, "output score tensor [H, W]")->required();
    sf.add_scoring(score);

    // eval
    std::string e_scores, e_labels, e_out;
    bool e_brute = false;
    auto* eval = app.add_subcommand("eval", "AUROC / AP / FPR95 of a score map");
    eval->add_option("--scores", e_scores, "score tensor [H, W]")->required();
    eval->add_option("--labels", e_labels, "label tensor [H, W]")->required();
    eval->add_option("--out", e_out, "also write key=value results here");
    eval->add_flag("--bruteforce", e_brute, "use the threshold-enumeration reference implementation");

    // synth
    std::string y_config, y_dir;
    std::optional<std::uint64_t> y_seed;
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
    synth->add_option("--config", y_config, "key=value scene config");
    synth->add_option("--seed", y_seed, "override the config seed");
    synth->add_option("--out-dir", y_dir, "directory for embeddings/labels/classifier/manifest")->required();

    // bench
    BenchConfig bc;
    std::string b_csv;
    bool b_assert = false;
    auto* bench = app.add_subcommand("bench", "iterative vs closed-form wall-clock sweep");
    bench->add_option("--sizes", bc.sizes, "sub-map pixel counts N")->delimiter(',');
    bench->add_option("--dim", bc.dim, "embedding dimension d");
    bench->add_option("--iters", bc.iterations, "iteration count T");
    bench->add_option("--partition", bc.partition, "partition factor n (recorded in the CSV)");
    bench->add_option("--alpha", bc.alpha, "continue probability");
    bench->add_option("--tau", bc.tau, "softmax temperature");
    bench->add_option("--repeats", bc.repeats, "best-of repetitions per cell");
    bench->add_option("--seed", bc.seed, "embedding seed");
    bench->add_option("--threads", bc.threads, "worker cap");
    bench->add_option("--csv", b_csv, "write CSV here instead of stdout");
    bench->add_flag("--assert-faster", b_assert, "fail unless iterative beats closed form at the largest N");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*process) {
            const auto cfg = pf.build();
            const auto emb = EmbeddingMap::from_tensor(read_tensor_file(p_emb));
            const auto cls = load_classifier(p_cls, p_bias);
            std::optional<LabelMap> labels;
            if (!p_labels.empty()) labels = LabelMap::from_tensor(read_tensor_file(p_labels));
            const auto out = run_pipeline(emb, cfg, &cls);
            for (const auto& w : out.warnings) std::cerr << "rwpm: warning: " << w << '\n';
            write_tensor_file(out.scores->to_tensor(), p_out);
            if (!p_refined.empty()) write_tensor_file(out.refined.to_tensor(), p_refined);
            if (!p_calib.empty() && out.calibration) write_text_file(p_calib, out.calibration->to_text());

            std::optional<EvalResult> metrics;
            if (labels) {
                metrics = evaluate(*out.scores, *labels);
                std::cout << metrics->line() << '\n';
            }

            std::ofstream man(p_manifest.empty() ? p_out + ".manifest.txt" : p_manifest);
            if (!man) throw IoError("cannot write manifest");
            cfg.write_key_values(man);
            man.precision(6);
            man << "embeddings=" << p_emb << "\nclassifier=" << p_cls << "\nbias=" << p_bias << "\nlabels=" << p_labels
                << "\nout=" << p_out << "\nH=" << emb.height() << "\nW=" << emb.width() << "\nd=" << emb.channels()
                << "\npeak_matrix_elems=" << out.peak_matrix_elems << "\nsplit_ms=" << out.timings.split_ms
                << "\nrefine_ms=" << out.timings.refine_ms << "\nscore_ms=" << out.timings.score_ms
                << "\ncalibrate_ms=" << out.timings.calibrate_ms << "\nassemble_ms=" << out.timings.assemble_ms
                << '\n';
            if (metrics) man << "metrics=" << metrics->line() << '\n';
        } else if (*refine) {
            const auto cfg = rf.build();
            const auto emb = EmbeddingMap::from_tensor(read_tensor_file(r_emb));
            const auto out = run_pipeline(emb, cfg);
            write_tensor_file(out.refined.to_tensor(), r_out);
        } else if (*score) {
            const auto cfg = sf.build();
            const auto emb = EmbeddingMap::from_tensor(read_tensor_file(s_emb));
            const auto cls = load_classifier(s_cls, s_bias);
            write_tensor_file(score_map(emb, cls, cfg.scoring).to_tensor(), s_out);
        } else if (*eval) {
            const auto scores = ScoreMap::from_tensor(read_tensor_file(e_scores));
            const auto labels = LabelMap::from_tensor(read_tensor_file(e_labels));
            const auto r = e_brute ? evaluate_bruteforce(scores, labels) : evaluate(scores, labels);
            std::cout << r.line() << '\n';
            if (!e_out.empty()) {
                std::ofstream out(e_out);
                if (!out) throw IoError("cannot open '" + e_out + "' for writing");
                r.write_key_values(out);
            }
        } else if (*synth) {
            SynthConfig cfg;
            if (!y_config.empty()) cfg = SynthConfig::from_key_values(read_key_value_file(y_config));
            if (y_seed) cfg.seed = *y_seed;
            const auto scene = generate_scene(cfg);
            std::filesystem::create_directories(y_dir);
            const std::filesystem::path dir(y_dir);
            write_tensor_file(scene.embeddings.to_tensor(), (dir / "embeddings.rwt").string());
            write_tensor_file(scene.labels.to_tensor(), (dir / "labels.rwt").string());
            write_tensor_file(scene.classifier.weights_tensor(), (dir / "classifier.rwt").string());
            write_tensor_file(scene.classifier.bias_tensor(), (dir / "classifier_bias.rwt").string());
            std::ofstream man(dir / "manifest.txt");
            if (!man) throw IoError("cannot write manifest");
            scene.write_manifest(man);
        } else if (*bench) {
            if (bc.sizes.empty()) throw ParameterError("bench needs at least one size");
            const auto rows = run_bench(bc);
            if (b_csv.empty()) {
                write_bench_csv(std::cout, rows);
            } else {
                std::ofstream out(b_csv);
                if (!out) throw IoError("cannot open '" + b_csv + "' for writing");
                write_bench_csv(out, rows);
            }
            if (b_assert) {
                const auto& it = rows[rows.size() - 2];
                const auto& cf = rows[rows.size() - 1];
                if (!(it.wall_ms < cf.wall_ms)) {
                    std::cerr << "rwpm: iterative (" << it.wall_ms << " ms) did not beat closed form ("
                              << cf.wall_ms << " ms) at N=" << it.n_pixels << '\n';
                    return 1;
                }
            }
        }
    } catch (const IoError& e) {
        return report(e, 2);
    } catch (const FormatError& e) {
        return report(e, 2);
    } catch (const LengthError& e) {
        return report(e, 2);
    } catch (const DataError& e) {
        return report(e, 2);
    } catch (const ParameterError& e) {
        return report(e, 2);
    } catch (const SizeError& e) {
        return report(e, 3);
    } catch (const PartitionError& e) {
        return report(e, 3);
    } catch (const EvaluationError& e) {
        return report(e, 3);
    } catch (const NumericalError& e) {
        return report(e, 4);
    } catch (const std::exception& e) {
        return report(e, 1);
    }
    return 0;
}
