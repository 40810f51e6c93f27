#pragma once

// Orchestration shared by the command-line tool, the Python module and the
// reproduction test: run-directory layout, stored predictions, the
// accuracy tables and curves, and the attention / occlusion analyses with
// their CSV, JSON and SVG outputs.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "punchline/attention.hpp"
#include "punchline/classifier.hpp"
#include "punchline/corpus.hpp"
#include "punchline/evaluation.hpp"
#include "punchline/language_model.hpp"
#include "punchline/perturbation.hpp"
#include "punchline/report.hpp"
#include "punchline/training.hpp"

namespace punchline {

// Directory layout under one output root.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path prepared_corpus() const { return root / "corpus" / "prepared.jsonl"; }
  std::filesystem::path models() const { return root / "models"; }
  // "pretrained_mlm/1S/finetuned/seed13" -> models/pretrained_mlm-1S-finetuned-seed13
  std::filesystem::path model_dir(const std::string& model_name) const;
  std::filesystem::path predictions(const std::string& name) const;
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path analysis(const std::string& what) const { return root / "analysis" / what; }
};

// Reads the prepared corpus, naming the file when it is missing.
Corpus load_prepared(const Workspace& ws);

// A checkpoint argument is either a directory or a model name inside the
// workspace.
std::filesystem::path resolve_checkpoint(const Workspace& ws, const std::string& arg);

// Every distinct non-punctuation word of the corpus, sorted.
std::vector<std::string> corpus_vocabulary(const Corpus& corpus);

// The transformer inside a classifier; throws for other encoders.
TransformerEncoder& transformer_of(HumorClassifier& classifier);

// ---------------------------------------------------------------------------
// Stored predictions

struct NamedOutcomes {
  std::string model;  // row label, e.g. "pretrained_mlm/finetuned" or "gpt2"
  Setup setup = Setup::single;
  std::vector<ItemOutcome> items;
};

void write_outcomes(const std::filesystem::path& path, const NamedOutcomes& outcomes);
NamedOutcomes read_outcomes(const std::filesystem::path& path);
// All prediction files of the workspace, sorted by file name.
std::vector<NamedOutcomes> read_all_outcomes(const Workspace& ws);

// Directory-safe unique name: kind, encoder id stem, setup, frozen or
// finetuned, seed.
std::string checkpoint_name(const ModelVariant& variant);

// Label used in tables for a classifier: encoder_id (or kind) plus
// frozen/finetuned, without setup and seed.
std::string table_label(const ModelVariant& variant);

// Test-split outcomes for a classifier or a likelihood model. The
// single-sentence likelihood threshold is fitted on the train split of
// `corpus`.
NamedOutcomes evaluate_checkpoint(HumorClassifier& classifier, const Corpus& corpus, std::uint64_t seed);
NamedOutcomes evaluate_language_model(const CausalLM& lm, const std::string& label, Setup setup,
                                      const Corpus& corpus, std::uint64_t seed,
                                      ThresholdResult* fitted = nullptr);

// ---------------------------------------------------------------------------
// Accuracy tables and the Jaccard curve

struct Table1Row {
  std::string model;
  // [setup][0 = full test, 1 = HQ subset]; unset when the model was not
  // evaluated in that setup.
  std::optional<MetricsReport> cells[2][2];
};

std::vector<Table1Row> build_table1(std::span<const NamedOutcomes> outcomes, const Corpus& corpus,
                                    std::uint64_t seed);
// table1.csv, table1.json and a bar chart of the full-test cells.
void emit_table1(const std::filesystem::path& dir, std::span<const Table1Row> rows);

struct Table2Column {
  std::string model;
  Setup setup = Setup::single;
  std::vector<MetricsReport> rows;  // one per humor type, in kHumorTypes order
};

std::vector<Table2Column> build_table2(std::span<const NamedOutcomes> outcomes, const Corpus& corpus,
                                       std::uint64_t seed);
void emit_table2(const std::filesystem::path& dir, std::span<const Table2Column> columns);

struct JaccardCurve {
  std::string model;
  Setup setup = Setup::single;
  std::vector<JaccardPoint> points;
};

std::vector<JaccardCurve> build_jaccard_curves(std::span<const NamedOutcomes> outcomes, const Corpus& corpus,
                                               std::span<const double> thresholds, std::uint64_t seed);
void emit_jaccard_curves(const std::filesystem::path& dir, std::span<const JaccardCurve> curves);

// ---------------------------------------------------------------------------
// Attention analyses

// Attention of the funny (or serious) sentence of every pair, in corpus
// order.
std::vector<SentenceAttention> corpus_attention(TransformerEncoder& encoder, const Corpus& corpus, bool funny);
std::vector<PairAttention> pair_attention(TransformerEncoder& encoder, const Corpus& corpus);

std::vector<AttentionTensor> tensors_of(std::span<const SentenceAttention> sentences);

struct NamedEncoder {
  std::string name;
  TransformerEncoder* encoder = nullptr;
};

struct AttentionDistanceResult {
  // Each model against the reference, per head and per layer.
  std::vector<std::string> models;
  std::vector<HeadMatrix> versus_reference;
  std::vector<std::vector<double>> versus_reference_layers;
  // Funny against serious for the reference and every model.
  std::vector<std::string> fs_models;
  std::vector<FunnySeriousDistance> funny_serious;
  std::vector<std::vector<double>> funny_serious_layers;
  std::size_t sentences = 0;
};

// Model-vs-reference distances average over both sentences of every pair
// of `corpus`; funny-vs-serious distances over its pairs. Tensors are
// computed one pair at a time.
AttentionDistanceResult attention_distances(NamedEncoder reference, std::span<const NamedEncoder> models,
                                            const Corpus& corpus);
void emit_attention_distances(const std::filesystem::path& dir, const AttentionDistanceResult& r);

struct SpecialPositionsResult {
  std::vector<std::string> models;
  std::vector<SpecialPositionTotals> totals;
  // Paired t-tests of every model after the first against the first, on
  // the per-sentence last-word totals.
  std::vector<TTestResult> last_word_vs_first;
};

SpecialPositionsResult special_positions(std::span<const NamedEncoder> models, const Corpus& corpus);
void emit_special_positions(const std::filesystem::path& dir, const SpecialPositionsResult& r);

// Chunk maps and localization over every pair of `corpus`, extracting
// attention in batches so that only `batch` pairs are held at once.
ChunkMaps chunk_maps_for(TransformerEncoder& encoder, const Corpus& corpus, std::size_t batch = 64);
LocalizationReport localization_for(TransformerEncoder& encoder, const Corpus& corpus, HeadId head,
                                    const PosTagger& tagger, PosTag pos_tag, const CausalLM* lm,
                                    std::size_t batch = 64);

void emit_chunk_maps(const std::filesystem::path& dir, const ChunkMaps& maps);

void emit_localization(const std::filesystem::path& dir, const LocalizationReport& r);

// Replacement items from the funny sentences of `corpus` with a non-empty
// edited chunk.
std::vector<ReplacementItem> replacement_items(const Corpus& corpus);
void emit_replacement(const std::filesystem::path& dir, HeadId head, const ReplacementResult& r);

void emit_flip_table(const std::filesystem::path& dir, const FlipRateTable& t);

// ---------------------------------------------------------------------------
// Full reproduction

struct ReproductionPlan {
  std::filesystem::path dataset;  // TSV
  std::filesystem::path work_dir;
  std::string mlm_id = "bert-base-uncased";
  std::string bow_vectors_id = "crawl-300d-2M.vec";
  std::string lm_id = "gpt2";
  std::vector<std::uint64_t> seeds = {13, 14};
  TrainConfig train;
  std::optional<int> hq_quality;
};

struct CriterionOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Trains and evaluates every model the reproduction criteria need and
// checks each criterion against the reference numbers. Progress lines go
// to `log`.
std::vector<CriterionOutcome> run_reproduction(const ReproductionPlan& plan,
                                               const std::function<void(const std::string&)>& log = {});

}  // namespace punchline
