#include <gtest/gtest.h>

#include "rwpm/bench.hpp"
#include "rwpm/metrics.hpp"
#include "rwpm/pipeline.hpp"
#include "rwpm/synth.hpp"

using namespace rwpm;

namespace {

SynthScene small_scene(std::uint64_t seed = 7) {
    SynthConfig c;
    c.seed = seed;
    c.height = 16;
    c.width = 16;
    c.dim = 8;
    c.classes = 3;
    return generate_scene(c);
}

} // namespace

TEST(Pipeline, AlphaZeroLeavesEmbeddings) {
    const auto s = small_scene();
    PipelineConfig cfg;
    cfg.alpha = 0.0;
    EXPECT_EQ(run_pipeline(s.embeddings, cfg).refined, s.embeddings);
}

TEST(Pipeline, PartitionOneEqualsRefineThenScore) {
    const auto s = small_scene();
    PipelineConfig cfg;
    cfg.partition = 1;
    const auto out = run_pipeline(s.embeddings, cfg, &s.classifier);
    const auto refined = refine_submap(s.embeddings, cfg);
    EXPECT_EQ(out.refined, refined);
    EXPECT_EQ(*out.scores, score_map(refined, s.classifier, cfg.scoring));
    EXPECT_FALSE(out.calibration);
    EXPECT_EQ(out.peak_matrix_elems, 256u * 256u);
}

TEST(Pipeline, PartitionedRefinementIsPerSubMap) {
    const auto s = small_scene();
    PipelineConfig cfg;
    cfg.partition = 2;
    const auto out = run_pipeline(s.embeddings, cfg);
    const auto parts = split_map(s.embeddings, 2);
    const auto refined_parts = split_map(out.refined, 2);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(refined_parts[i], refine_submap(parts[i], cfg));
    EXPECT_EQ(out.peak_matrix_elems, 64u * 64u);
}

TEST(Pipeline, ThreadsDoNotChangeOutput) {
    const auto s = small_scene();
    PipelineConfig a;
    a.partition = 4;
    a.calibration = CalibrationMode::additive;
    PipelineConfig b = a;
    b.threads = 4;
    const auto x = run_pipeline(s.embeddings, a, &s.classifier);
    const auto y = run_pipeline(s.embeddings, b, &s.classifier);
    EXPECT_EQ(x.refined, y.refined);
    EXPECT_EQ(*x.scores, *y.scores);
}

TEST(Pipeline, CalibrationDefaults) {
    PipelineConfig cfg;
    cfg.partition = 2;
    EXPECT_EQ(cfg.effective_calibration(), CalibrationMode::off);
    cfg.partition = 4;
    EXPECT_EQ(cfg.effective_calibration(), CalibrationMode::multiplicative);
    cfg.calibration = CalibrationMode::off;
    EXPECT_EQ(cfg.effective_calibration(), CalibrationMode::off);
}

TEST(Pipeline, WarnsWhenLargePartitionUncalibrated) {
    const auto s = small_scene();
    PipelineConfig cfg;
    cfg.partition = 4;
    cfg.calibration = CalibrationMode::off;
    EXPECT_EQ(run_pipeline(s.embeddings, cfg).warnings.size(), 1u);
}

TEST(Pipeline, CalibratedScoresAgreeAcrossEdges) {
    const auto s = small_scene();
    PipelineConfig cfg;
    cfg.partition = 4;
    // Biased logits put energy scores on both sides of zero, which only the
    // additive mode can handle.
    EXPECT_THROW(run_pipeline(s.embeddings, cfg, &s.classifier), CalibrationError);
    cfg.calibration = CalibrationMode::additive;
    const auto out = run_pipeline(s.embeddings, cfg, &s.classifier);
    ASSERT_TRUE(out.calibration);
    const auto parts = split_map(*out.scores, 4);
    for (const auto& st : out.calibration->steps) {
        const auto e = edge_mean(parts[st.ref_row * 4 + st.ref_col], parts[st.target_row * 4 + st.target_col], st.side);
        EXPECT_NEAR(e.i, e.j, 1e-9 * std::max(1.0, std::abs(e.i)));
    }
}

TEST(Pipeline, IndivisibleGridFails) {
    const auto s = small_scene();
    PipelineConfig cfg;
    cfg.partition = 3;
    EXPECT_THROW(run_pipeline(s.embeddings, cfg), PartitionError);
}

TEST(Pipeline, ConfigKeys) {
    PipelineConfig cfg;
    cfg.apply_key_values(parse_key_values("alpha=0.5\ntau=0.1\niters=7\npartition=4\nknn=3\nsolver=closed_form\n"
                                          "score_fn=rba\ncalibrate=additive\n"));
    EXPECT_EQ(cfg.alpha, 0.5);
    EXPECT_EQ(cfg.iterations, 7u);
    EXPECT_EQ(cfg.graph, GraphMode::topk);
    EXPECT_EQ(cfg.solver, Solver::closed_form);
    EXPECT_EQ(cfg.scoring.kind, ScoreKind::rba);
    EXPECT_EQ(cfg.effective_calibration(), CalibrationMode::additive);
    EXPECT_THROW(cfg.apply_key_values(parse_key_values("beta=1\n")), ParameterError);
}

TEST(Pipeline, DiffusionImprovesSmallScene) {
    const auto s = small_scene(3);
    PipelineConfig cfg;
    const auto raw = evaluate(score_map(s.embeddings, s.classifier, cfg.scoring), s.labels);
    const auto out = run_pipeline(s.embeddings, cfg, &s.classifier);
    const auto diffused = evaluate(*out.scores, s.labels);
    EXPECT_GE(diffused.ap, raw.ap);
}

TEST(Bench, SmallSweepWritesCsv) {
    BenchConfig cfg;
    cfg.sizes = {16, 32};
    const auto rows = run_bench(cfg);
    ASSERT_EQ(rows.size(), 4u);
    std::ostringstream os;
    write_bench_csv(os, rows);
    const auto text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), kBenchCsvHeader);
    EXPECT_NE(text.find("closed_form,16,16,inf,2,"), std::string::npos);
    EXPECT_EQ(rows[1].peak_matrix_elems, 2u * 16 * 16);
}

TEST(Bench, LoglogSlope) {
    const std::vector<double> x{1, 10, 100}, y{3, 300, 30000};
    EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
}
