#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "punchline/experiments.hpp"
#include "punchline/report.hpp"
#include "support.hpp"

using namespace punchline;
namespace pt = punchline::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_files(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST(Csv, QuotesOnlyWhenNeeded) {
  const auto dir = pt::scratch_dir("csv");
  write_csv(dir / "t.csv", {"name", "value"},
            {{"plain", "1"}, {"with,comma", "2"}, {"say \"hi\"", "3"}, {"two\nlines", "4"}});
  EXPECT_EQ(slurp(dir / "t.csv"),
            "name,value\nplain,1\n\"with,comma\",2\n\"say \"\"hi\"\"\",3\n\"two\nlines\",4\n");
  EXPECT_THROW(write_csv(dir / "bad.csv", {"a", "b"}, {{"only one"}}), std::invalid_argument);
}

TEST(Numbers, Formatting) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333");
}

TEST(Json, NonFiniteBecomesNull) {
  MetricsReport r;
  r.name = "m";
  r.point_estimate = 0.7;
  r.ci_low = std::nan("");
  r.ci_high = 0.8;
  r.n = 10;
  const auto j = to_json(r);
  EXPECT_TRUE(j["ci_low"].is_null());
  EXPECT_DOUBLE_EQ(j["point_estimate"].get<double>(), 0.7);
  auto m = HeadMatrix::zeros(2, 3);
  m.at(1, 2) = 4.0;
  const auto hj = to_json(m);
  ASSERT_EQ(hj.size(), 6u);
  EXPECT_EQ(hj[5]["layer"], 2);
  EXPECT_EQ(hj[5]["head"], 3);
  EXPECT_DOUBLE_EQ(hj[5]["value"].get<double>(), 4.0);
}

TEST(Plots, EachFigureHasItsCsvAndSvg) {
  const auto dir = pt::scratch_dir("plots");
  auto m = HeadMatrix::zeros(2, 2);
  m.at(0, 1) = 1.0;
  emit_heatmap(dir / "heat", m, "a <title> & more");
  EXPECT_TRUE(fs::exists(dir / "heat.csv"));
  const auto svg = slurp(dir / "heat.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("a &lt;title&gt; &amp; more"), std::string::npos);
  EXPECT_EQ(slurp(dir / "heat.csv"), "layer,head,value\n1,1,0\n1,2,1\n2,1,0\n2,2,0\n");

  const std::vector<PlotSeries> series = {{"s1", {0, 0.5}, {0.6, 0.7}, {0.5, 0.6}, {0.7, 0.8}}};
  emit_line_plot(dir / "line", "t", "x", "y", series);
  EXPECT_TRUE(fs::exists(dir / "line.svg"));
  EXPECT_EQ(slurp(dir / "line.csv"), "series,x,y,low,high\ns1,0,0.6,0.5,0.7\ns1,0.5,0.7,0.6,0.8\n");

  const std::vector<BarValue> bars = {{"g1", "a", 0.5, 0.4, 0.6}, {"g1", "b", 0.7, 0.7, 0.7}};
  emit_bar_chart(dir / "bars", "t", "y", bars);
  EXPECT_TRUE(fs::exists(dir / "bars.svg"));
  EXPECT_EQ(slurp(dir / "bars.csv"), "group,series,value,low,high\ng1,a,0.5,0.4,0.6\ng1,b,0.7,0.7,0.7\n");
}

TEST(Manifest, NeverOverwrites) {
  const auto dir = pt::scratch_dir("manifest");
  RunManifest m;
  m.command = "evaluate";
  m.finished_at = "2026-01-02T03:04:05.000Z";
  m.seeds["train"] = 13;
  const auto a = write_manifest(m, dir);
  const auto first = slurp(a);
  m.exit_status = 2;
  const auto b = write_manifest(m, dir);
  const auto c = write_manifest(m, dir);
  EXPECT_NE(a, b);
  EXPECT_NE(b, c);
  EXPECT_EQ(slurp(a), first);
  EXPECT_EQ(count_files(dir / "manifests"), 3u);
  EXPECT_EQ(a.filename().string().find(':'), std::string::npos);
  const auto j = Json::parse(slurp(b));
  EXPECT_EQ(j["exit_status"], 2);
  EXPECT_EQ(j["seeds"]["train"], 13);
  for (const auto* key : {"command", "argv", "config", "data_hash", "seeds", "artifacts", "metrics", "started_at",
                          "finished_at", "exit_status"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Environment, OutputRoot) {
  ::setenv("PUNCHLINE_OUTPUT_ROOT", "/tmp/somewhere-else", 1);
  EXPECT_EQ(output_root(), fs::path("/tmp/somewhere-else"));
  ::unsetenv("PUNCHLINE_OUTPUT_ROOT");
  EXPECT_EQ(output_root(), fs::current_path() / "punchline-out");
}

TEST(Workspace, LayoutAndStoredPredictions) {
  const auto dir = pt::scratch_dir("workspace");
  Workspace ws{dir};
  EXPECT_EQ(ws.model_dir("pretrained_mlm/1S/finetuned/seed13"), dir / "models" / "pretrained_mlm-1S-finetuned-seed13");
  NamedOutcomes o;
  o.model = "bert/finetuned";
  o.setup = Setup::paired;
  o.items = {{"p1", "p1", 0.9, 1, 1, false}, {"p2", "p2", 0.2, 0, 1, true}};
  write_outcomes(ws.predictions("b"), o);
  const auto back = read_outcomes(ws.predictions("b"));
  EXPECT_EQ(back.model, o.model);
  EXPECT_EQ(back.setup, Setup::paired);
  ASSERT_EQ(back.items.size(), 2u);
  EXPECT_EQ(back.items[1].tie, true);
  EXPECT_DOUBLE_EQ(back.items[0].score, 0.9);
  EXPECT_EQ(read_all_outcomes(ws).size(), 1u);

  ModelVariant v;
  v.encoder_kind = EncoderKind::pretrained_mlm;
  v.encoder_id = "/cache/bert-base-uncased";
  v.setup = Setup::single;
  v.seed = 13;
  EXPECT_EQ(checkpoint_name(v), "pretrained_mlm-bert-base-uncased-1S-finetuned-seed13");
  EXPECT_EQ(table_label(v), "bert-base-uncased/finetuned");
}

TEST(Tables, Table1CellsAndFiles) {
  const auto corpus = pt::synthetic_corpus(200);
  PairFilter test_only;
  test_only.split = Split::test;
  const auto test = filter(corpus, test_only);
  NamedOutcomes single{"m", Setup::single, {}}, paired{"m", Setup::paired, {}};
  for (const auto& p : test.pairs()) {
    single.items.push_back({p.pair_id + "/funny", p.pair_id, 0.9, 1, 1, false});
    single.items.push_back({p.pair_id + "/serious", p.pair_id, 0.9, 1, 0, false});
    paired.items.push_back({p.pair_id, p.pair_id, 0.9, 1, 1, false});
  }
  const std::vector<NamedOutcomes> all = {single, paired};
  const auto rows = build_table1(all, corpus, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].cells[0][0]->point_estimate, 0.5);
  EXPECT_DOUBLE_EQ(rows[0].cells[1][0]->point_estimate, 1.0);
  EXPECT_EQ(rows[0].cells[0][1]->n, 2 * test.hq_ids().size());
  const auto dir = pt::scratch_dir("table1");
  emit_table1(dir, rows);
  for (const auto* f : {"table1.csv", "table1.json", "table1.svg"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
}

// The whole pipeline on tiny models: every criterion is evaluated and
// reported, whatever the verdict on such a small corpus.
TEST(Reproduction, RunsEndToEndOnTinyModels) {
  const auto dir = pt::scratch_dir("reproduction");
  const auto cache = dir / "cache";
  fs::create_directories(cache);
  pt::make_tiny_mlm(cache / "tiny-mlm");
  pt::make_tiny_gpt2(cache / "tiny-gpt2");
  pt::synthetic_vectors(8).save_text(cache / "vectors.vec");
  pt::write_tsv(dir / "pairs.tsv", pt::synthetic_pairs(200, 4));
  ::setenv("PUNCHLINE_MODEL_CACHE", cache.c_str(), 1);

  ReproductionPlan plan;
  plan.dataset = dir / "pairs.tsv";
  plan.work_dir = dir / "work";
  plan.mlm_id = "tiny-mlm";
  plan.bow_vectors_id = "vectors.vec";
  plan.lm_id = "tiny-gpt2";
  plan.seeds = {13};
  plan.train.max_epochs = 1;
  plan.train.batch_size = 16;
  std::vector<std::string> log;
  const auto results = run_reproduction(plan, [&](const std::string& m) { log.push_back(m); });
  ::unsetenv("PUNCHLINE_MODEL_CACHE");

  const std::vector<std::string> names = {"table1 headline cells",        "table2 type ordering",
                                          "jaccard curve shape",          "attention distance grows with depth",
                                          "laughing head",                "occlusion flip table"};
  ASSERT_EQ(results.size(), names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(results[i].name, names[i]);
    EXPECT_FALSE(results[i].detail.empty()) << names[i];
  }
  EXPECT_FALSE(log.empty());
  EXPECT_TRUE(fs::exists(plan.work_dir / "reports" / "table1.csv"));
}
