// punchline: prepare the pair corpus, train and evaluate humor classifiers,
// and run the attention / occlusion analyses. Every command writes one run
// manifest under the output root.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "punchline/experiments.hpp"
#include "punchline/hashing.hpp"

namespace fs = std::filesystem;
using namespace punchline;

namespace {

struct GlobalFlags {
  std::optional<std::string> out;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model_cache;
};

// Flags, then the config file, then the environment and defaults.
struct Context {
  Workspace ws;
  ModelCache cache;
  std::uint64_t seed = 13;
  std::map<std::string, std::string> file;
  std::optional<fs::path> config_path;
  RunManifest manifest;

  std::optional<std::string> setting(const std::string& key) const {
    const auto it = file.find(key);
    if (it == file.end()) return std::nullopt;
    return it->second;
  }

  void artifact(const fs::path& p) { manifest.artifacts.push_back(p.string()); }
};

Context make_context(const GlobalFlags& g) {
  Context ctx;
  if (g.config) {
    ctx.config_path = *g.config;
    ctx.file = read_key_value_file(*g.config);
  }
  if (g.seed) {
    ctx.seed = *g.seed;
  } else if (const auto s = ctx.setting("seed")) {
    ctx.seed = std::stoull(*s);
  }
  if (g.out) {
    ctx.ws.root = *g.out;
  } else if (const auto o = ctx.setting("out")) {
    ctx.ws.root = *o;
  } else {
    ctx.ws.root = output_root();
  }
  if (g.model_cache) {
    ctx.cache = ModelCache(*g.model_cache);
  } else if (const auto c = ctx.setting("model_cache")) {
    ctx.cache = ModelCache(*c);
  }
  ctx.manifest.seeds["seed"] = ctx.seed;
  ctx.manifest.config = {{"out", ctx.ws.root.string()}, {"model_cache", ctx.cache.root().string()}, {"seed", ctx.seed}};
  if (ctx.config_path) {
    ctx.manifest.config["config_file"] = ctx.config_path->string();
    Json values = Json::object();
    for (const auto& [k, v] : ctx.file) values[k] = v;
    ctx.manifest.config["config_values"] = values;
  }
  return ctx;
}

void note(const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); }

// --split / --limit selection of pairs for analyses.
struct PairSelection {
  std::string split = "test";
  std::optional<std::size_t> limit;

  void add(CLI::App* cmd) {
    cmd->add_option("--split", split, "Corpus split to analyze")->check(CLI::IsMember({"train", "val", "test"}));
    cmd->add_option("--limit", limit, "Use only the first N pairs");
  }

  Corpus apply(const Corpus& corpus) const {
    PairFilter f;
    f.split = parse_split(split);
    Corpus sub = filter(corpus, f);
    if (!limit || *limit >= sub.size()) return sub;
    std::vector<SentencePair> pairs(sub.pairs().begin(), sub.pairs().begin() + static_cast<std::ptrdiff_t>(*limit));
    std::set<std::string> hq;
    for (const auto& p : pairs) {
      if (sub.is_hq(p.pair_id)) hq.insert(p.pair_id);
    }
    return Corpus(std::move(pairs), std::move(hq));
  }
};

// A trained checkpoint, or a pretrained encoder directory from the cache.
struct LoadedTransformer {
  std::string name;
  std::optional<HumorClassifier> classifier;
  std::unique_ptr<TransformerEncoder> owned;
  TransformerEncoder* encoder = nullptr;
};

LoadedTransformer load_transformer(const Context& ctx, const std::string& arg) {
  LoadedTransformer m;
  m.name = fs::path(arg).filename().string();
  try {
    const auto dir = resolve_checkpoint(ctx.ws, arg);
    m.classifier.emplace(HumorClassifier::load(dir, ctx.cache));
    m.encoder = &transformer_of(*m.classifier);
    return m;
  } catch (const std::runtime_error&) {
  }
  const auto dir = ctx.cache.resolve(arg);
  if (!fs::exists(dir / "config.json")) {
    throw std::runtime_error("missing model '" + arg + "': neither a checkpoint nor a pretrained encoder in '" +
                             ctx.cache.root().string() + "'");
  }
  m.owned = TransformerEncoder::load(dir, EncoderKind::pretrained_mlm);
  m.encoder = m.owned.get();
  return m;
}

std::optional<HeadId> parse_head_arg(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  const auto h = HeadId::parse(*text);
  if (!h) throw CLI::ValidationError("--head", "expected LAYER-HEAD, e.g. 10-6");
  return h;
}

std::string data_hash(const Workspace& ws) {
  return fs::exists(ws.prepared_corpus()) ? sha256_file(ws.prepared_corpus()) : std::string();
}

// ---------------------------------------------------------------------------

struct PrepareArgs {
  std::string input;
  std::optional<int> hq_quality;
};

void cmd_prepare(Context& ctx, const PrepareArgs& a) {
  ColumnMapping schema;
  if (a.hq_quality) {
    schema.hq_quality = a.hq_quality;
  } else if (const auto q = ctx.setting("prepare.hq_quality")) {
    schema.hq_quality = std::stoi(*q);
  }
  std::vector<RowDiagnostic> rejected;
  const Corpus corpus = load_corpus(a.input, schema, &rejected);
  const auto path = ctx.ws.prepared_corpus();
  fs::create_directories(path.parent_path());
  write_prepared_corpus(corpus, path, ctx.seed);
  ctx.artifact(path);
  ctx.manifest.data_hash = sha256_file(path);
  ctx.manifest.config["input"] = a.input;

  std::size_t widened = 0;
  for (const auto& p : corpus.pairs()) widened += corpus.alignment(p.pair_id).widened;
  Json counts = {{"train", corpus.count(Split::train)},
                 {"val", corpus.count(Split::val)},
                 {"test", corpus.count(Split::test)},
                 {"hq", corpus.hq_ids().size()},
                 {"rejected_rows", rejected.size()},
                 {"widened_alignments", widened}};
  Json types = Json::object();
  std::size_t annotated = 0;
  for (const auto t : kHumorTypes) {
    types[std::string(to_string(t))] = corpus.count(t);
    annotated += corpus.count(t);
  }
  counts["humor_types"] = types;
  counts["type_annotated"] = annotated;
  ctx.manifest.metrics = counts;

  if (!rejected.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : rejected) rows.push_back({std::to_string(r.row), r.message});
    const auto rej = ctx.ws.root / "corpus" / "rejected_rows.csv";
    write_csv(rej, {"row", "message"}, rows);
    ctx.artifact(rej);
    for (const auto& r : rejected) note("row " + std::to_string(r.row) + ": " + r.message);
  }
  std::printf("pairs: %zu train / %zu val / %zu test\n", corpus.count(Split::train), corpus.count(Split::val),
              corpus.count(Split::test));
  std::printf("HQ test pairs: %zu\n", corpus.hq_ids().size());
  std::printf("type-annotated pairs: %zu\n", annotated);
  for (const auto t : kHumorTypes) std::printf("  %-24s %zu\n", std::string(to_string(t)).c_str(), corpus.count(t));
  if (!rejected.empty()) std::printf("rejected rows: %zu\n", rejected.size());
  std::printf("wrote %s\n", path.c_str());
}

struct TrainArgs {
  std::string encoder = "pretrained_mlm";
  std::string encoder_id;
  std::string setup = "1S";
  bool frozen = false;
  std::optional<double> lr;
  std::optional<int> batch_size, epochs, patience;
  std::optional<int> recurrent_hidden;
  std::optional<int> tf_layers, tf_heads, tf_hidden, tf_intermediate;
  std::optional<std::string> name;
};

void cmd_train(Context& ctx, const TrainArgs& a) {
  const Corpus corpus = load_prepared(ctx.ws);
  ctx.manifest.data_hash = data_hash(ctx.ws);
  ModelVariant v;
  const auto kind = parse_encoder_kind(a.encoder);
  if (!kind) throw CLI::ValidationError("--encoder", "unknown encoder kind '" + a.encoder + "'");
  const auto setup = parse_setup(a.setup);
  if (!setup) throw CLI::ValidationError("--setup", "expected 1S or PS");
  v.encoder_kind = *kind;
  v.setup = *setup;
  v.encoder_id = a.encoder_id;
  v.frozen = a.frozen;
  v.seed = ctx.seed;

  TrainConfig cfg;
  if (ctx.config_path) cfg = load_train_config(*ctx.config_path, cfg);
  cfg.seed = ctx.seed;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.epochs) cfg.max_epochs = *a.epochs;
  if (a.patience) cfg.early_stop_patience = *a.patience;
  cfg.validate();

  EncoderBuildOptions opts;
  const auto from = [&](const std::optional<int>& flag, const char* key, int& target) {
    if (flag) {
      target = *flag;
    } else if (const auto s = ctx.setting(std::string("encoder.") + key)) {
      target = std::stoi(*s);
    }
  };
  from(a.recurrent_hidden, "recurrent_hidden", opts.recurrent_hidden);
  from(a.tf_layers, "layers", opts.transformer.layers);
  from(a.tf_heads, "heads", opts.transformer.heads);
  from(a.tf_hidden, "hidden", opts.transformer.hidden);
  from(a.tf_intermediate, "intermediate", opts.transformer.intermediate);

  HumorClassifier clf(v, build_encoder(v, ctx.cache, &corpus, opts));
  note("training " + v.name());
  const auto log = train(clf, corpus, cfg, [](const EpochLog& e) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "epoch %d  train loss %.5f  val accuracy %.4f", e.epoch, e.train_loss,
                  e.val_accuracy);
    note(buf);
  });
  const std::string name = a.name ? *a.name : checkpoint_name(v);
  const auto dir = ctx.ws.model_dir(name);
  clf.save(dir);

  Json epochs = Json::array();
  for (const auto& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
  }
  const Json summary = {{"model", v.name()},
                        {"best_epoch", log.best_epoch},
                        {"best_val_accuracy", log.best_val_accuracy},
                        {"first_batch_loss", log.first_batch_loss},
                        {"early_stopped", log.early_stopped},
                        {"encoder_checksum_before", log.encoder_checksum_before},
                        {"encoder_checksum_after", log.encoder_checksum_after},
                        {"train_instances", log.train_instances},
                        {"val_instances", log.val_instances},
                        {"learning_rate", log.learning_rate},
                        {"epochs", epochs}};
  write_json(dir / "train_log.json", summary);
  ctx.artifact(dir);
  ctx.manifest.config["variant"] = v.name();
  ctx.manifest.config["encoder_id"] = v.encoder_id;
  ctx.manifest.config["train"] = {{"learning_rate", log.learning_rate},
                                  {"batch_size", cfg.batch_size},
                                  {"max_epochs", cfg.max_epochs},
                                  {"early_stop_patience", cfg.early_stop_patience}};
  ctx.manifest.metrics = {{"best_val_accuracy", log.best_val_accuracy}, {"best_epoch", log.best_epoch}};
  std::printf("best val accuracy %.4f (epoch %d)\nwrote %s\n", log.best_val_accuracy, log.best_epoch, dir.c_str());
}

struct EvaluateArgs {
  std::vector<std::string> models;
  std::vector<std::string> lms;
  bool table1 = false, table2 = false, jaccard = false;
  std::vector<double> thresholds;
};

void emit_tables(Context& ctx, const Corpus& corpus, bool t1, bool t2, bool jac, std::vector<double> thresholds) {
  const auto outcomes = read_all_outcomes(ctx.ws);
  if (outcomes.empty()) throw std::runtime_error("no stored predictions in '" + (ctx.ws.root / "predictions").string() +
                                                 "' (run `punchline evaluate --model ...` first)");
  const auto dir = ctx.ws.reports();
  if (t1) {
    const auto rows = build_table1(outcomes, corpus, ctx.seed);
    emit_table1(dir, rows);
    ctx.artifact(dir / "table1.csv");
    std::printf("%-36s %8s %8s %8s %8s\n", "model", "1S Full", "1S HQ", "PS Full", "PS HQ");
    for (const auto& r : rows) {
      std::printf("%-36s", r.model.c_str());
      for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < 2; ++k) {
          const auto& c = r.cells[s][k];
          if (c && !c->omitted) {
            std::printf(" %8.3f", c->point_estimate);
          } else {
            std::printf(" %8s", "-");
          }
        }
      }
      std::printf("\n");
    }
  }
  if (t2) {
    emit_table2(dir, build_table2(outcomes, corpus, ctx.seed));
    ctx.artifact(dir / "table2.csv");
  }
  if (jac) {
    if (thresholds.empty()) thresholds = default_jaccard_thresholds();
    emit_jaccard_curves(dir, build_jaccard_curves(outcomes, corpus, thresholds, ctx.seed));
    ctx.artifact(dir / "accuracy_vs_jaccard.csv");
  }
}

void cmd_evaluate(Context& ctx, EvaluateArgs a) {
  const Corpus corpus = load_prepared(ctx.ws);
  ctx.manifest.data_hash = data_hash(ctx.ws);
  if (a.lms.empty()) {
    if (const auto lm = ctx.setting("evaluate.lm")) a.lms.push_back(*lm);
  }
  if (a.models.empty() && a.lms.empty() && !a.table1 && !a.table2 && !a.jaccard) {
    throw CLI::ValidationError("evaluate", "nothing to do: give --model, --lm or a table flag");
  }
  Json metrics = Json::object();
  for (const auto& m : a.models) {
    const auto dir = resolve_checkpoint(ctx.ws, m);
    auto clf = HumorClassifier::load(dir, ctx.cache);
    const auto o = evaluate_checkpoint(clf, corpus, ctx.seed);
    const auto path = ctx.ws.predictions(checkpoint_name(clf.variant()));
    write_outcomes(path, o);
    ctx.artifact(path);
    const auto r = make_report(o.model, setup_tag(o.setup), o.items, ctx.seed);
    metrics[clf.variant().name()] = to_json(r);
    std::printf("%s: accuracy %.4f [%.4f, %.4f] n=%zu\n", clf.variant().name().c_str(), r.point_estimate, r.ci_low,
                r.ci_high, r.n);
  }
  for (const auto& id : a.lms) {
    const auto lm = load_language_model(id, ctx.cache);
    const std::string label = fs::path(id).stem().string();
    for (const Setup s : {Setup::single, Setup::paired}) {
      ThresholdResult th;
      const auto o = evaluate_language_model(*lm, label, s, corpus, ctx.seed, &th);
      const auto path = ctx.ws.predictions(label + "-" + setup_tag(s));
      write_outcomes(path, o);
      ctx.artifact(path);
      const auto r = make_report(o.model, setup_tag(s), o.items, ctx.seed);
      Json j = to_json(r);
      if (s == Setup::single) {
        j["threshold"] = th.threshold;
        j["train_accuracy"] = th.train_accuracy;
      }
      metrics[label + "/" + setup_tag(s)] = j;
      std::printf("%s/%s: accuracy %.4f [%.4f, %.4f] n=%zu\n", label.c_str(), setup_tag(s).c_str(),
                  r.point_estimate, r.ci_low, r.ci_high, r.n);
    }
  }
  ctx.manifest.metrics = metrics;
  if (a.table1 || a.table2 || a.jaccard) emit_tables(ctx, corpus, a.table1, a.table2, a.jaccard, a.thresholds);
}

struct AnalyzeArgs {
  std::vector<std::string> models;
  std::optional<std::string> reference;
  std::optional<std::string> head;
  std::optional<std::string> lm;
  std::optional<std::string> pos_lexicon;
  std::optional<std::string> pos_tag;
  bool save_tensors = false;
  PairSelection pairs;
};

void cmd_attention_distance(Context& ctx, const AnalyzeArgs& a) {
  const Corpus corpus = a.pairs.apply(load_prepared(ctx.ws));
  auto ref = load_transformer(ctx, a.reference.value());
  std::vector<LoadedTransformer> loaded;
  for (const auto& m : a.models) loaded.push_back(load_transformer(ctx, m));
  std::vector<NamedEncoder> named;
  for (auto& m : loaded) named.push_back({m.name, m.encoder});
  const auto r = attention_distances({ref.name, ref.encoder}, named, corpus);
  const auto dir = ctx.ws.analysis("attention-distance");
  emit_attention_distances(dir, r);
  ctx.artifact(dir);
  Json m = Json::object();
  for (std::size_t k = 0; k < r.fs_models.size(); ++k) {
    const auto& fs = r.funny_serious[k];
    m[r.fs_models[k]] = {{"funny_serious_layers", r.funny_serious_layers[k]},
                         {"pairs_used", fs.used},
                         {"pairs_excluded", fs.excluded}};
    std::printf("%s: funny/serious pairs used %zu, excluded %zu (length mismatch)\n", r.fs_models[k].c_str(),
                fs.used, fs.excluded);
  }
  for (std::size_t k = 0; k < r.models.size(); ++k) {
    m[r.models[k]]["versus_reference_layers"] = r.versus_reference_layers[k];
    std::printf("%s vs %s per layer:", r.models[k].c_str(), ref.name.c_str());
    for (const double v : r.versus_reference_layers[k]) std::printf(" %.4f", v);
    std::printf("\n");
  }
  ctx.manifest.metrics = m;
  if (a.save_tensors) {
    for (auto& lm : loaded) {
      const auto funny = corpus_attention(*lm.encoder, corpus, true);
      const auto path = dir / (lm.name + "_funny.plattn");
      write_attention_file(path, tensors_of(funny));
      ctx.artifact(path);
    }
  }
}

void cmd_special_positions(Context& ctx, const AnalyzeArgs& a) {
  const Corpus corpus = a.pairs.apply(load_prepared(ctx.ws));
  std::vector<LoadedTransformer> loaded;
  for (const auto& m : a.models) loaded.push_back(load_transformer(ctx, m));
  std::vector<NamedEncoder> named;
  for (auto& m : loaded) named.push_back({m.name, m.encoder});
  const auto r = special_positions(named, corpus);
  const auto dir = ctx.ws.analysis("special-positions");
  emit_special_positions(dir, r);
  ctx.artifact(dir);
  Json m = Json::object();
  for (std::size_t k = 0; k < r.models.size(); ++k) {
    const auto& t = r.totals[k];
    m[r.models[k]] = {{"first_word", t.first_word}, {"last_word", t.last_word}, {"cls", t.cls}, {"sep", t.sep}};
    std::printf("%-32s first %.3f  last %.3f  CLS %.3f  SEP %.3f\n", r.models[k].c_str(), t.first_word, t.last_word,
                t.cls, t.sep);
    if (k > 0) {
      const auto& tt = r.last_word_vs_first[k - 1];
      m[r.models[k]]["last_word_vs_first"] = to_json(tt);
      std::printf("  last word vs %s: p = %.3g%s\n", r.models[0].c_str(), tt.p_value,
                  tt.significant ? " (significant)" : "");
    }
  }
  ctx.manifest.metrics = m;
}

void cmd_chunk_maps(Context& ctx, const AnalyzeArgs& a) {
  const Corpus corpus = a.pairs.apply(load_prepared(ctx.ws));
  auto m = load_transformer(ctx, a.models.at(0));
  const auto maps = chunk_maps_for(*m.encoder, corpus);
  const auto dir = ctx.ws.analysis("chunk-maps") / m.name;
  emit_chunk_maps(dir, maps);
  ctx.artifact(dir);
  const HeadId top = argmax_head(maps.funny_chunk);
  ctx.manifest.metrics = {{"argmax_head_funny_chunk", top.str()},
                          {"pairs", maps.pairs},
                          {"empty_serious_chunk", maps.empty_serious_chunk}};
  std::printf("head with most attention on the edited chunk: %s (%.4f per position)\n", top.str().c_str(),
              maps.funny_chunk.at(top));
  std::printf("pairs %zu; excluded from the serious-chunk map: %zu\n", maps.pairs, maps.empty_serious_chunk);
}

HeadId head_or_argmax(Context& ctx, const AnalyzeArgs& a, TransformerEncoder& enc, const Corpus& corpus) {
  if (auto h = parse_head_arg(a.head ? a.head : ctx.setting("analyze.head"))) return *h;
  const auto maps = chunk_maps_for(enc, corpus);
  const HeadId h = argmax_head(maps.funny_chunk);
  note("no --head given; using the argmax head of the edited-chunk map: " + h.str());
  return h;
}

void cmd_localize(Context& ctx, const AnalyzeArgs& a) {
  const Corpus full = load_prepared(ctx.ws);
  const Corpus corpus = a.pairs.apply(full);
  auto m = load_transformer(ctx, a.models.at(0));
  const HeadId head = head_or_argmax(ctx, a, *m.encoder, corpus);
  PosTagger tagger;
  if (a.pos_lexicon) tagger.load_lexicon(*a.pos_lexicon);
  PosTag tag;
  if (a.pos_tag) {
    const auto t = parse_pos_tag(*a.pos_tag);
    if (!t) throw CLI::ValidationError("--pos-tag", "unknown tag '" + *a.pos_tag + "'");
    tag = *t;
  } else {
    PairFilter f;
    f.split = Split::train;
    const Corpus train_pairs = filter(full, f);
    std::vector<TokenAlignment> alignments;
    for (const auto& p : train_pairs.pairs()) alignments.push_back(train_pairs.alignment(p.pair_id));
    if (alignments.empty()) {
      for (const auto& p : corpus.pairs()) alignments.push_back(corpus.alignment(p.pair_id));
    }
    tag = most_edited_tag(tagger, alignments);
  }
  const auto lm_id = a.lm ? a.lm : ctx.setting("evaluate.lm");
  std::unique_ptr<CausalLM> lm;
  if (lm_id) lm = load_language_model(*lm_id, ctx.cache);
  const auto r = localization_for(*m.encoder, corpus, head, tagger, tag, lm.get());
  const auto dir = ctx.ws.analysis("localize") / m.name;
  emit_localization(dir, r);
  ctx.artifact(dir);
  ctx.manifest.metrics = {{"head", head.str()},
                          {"sentences", r.sentences},
                          {"head_accuracy", r.head_accuracy},
                          {"last_word_accuracy", r.last_word_accuracy},
                          {"pos_accuracy", r.pos_accuracy},
                          {"pos_tag", std::string(to_string(tag))},
                          {"lm_accuracy", lm ? Json(r.lm_accuracy) : Json(nullptr)}};
  std::printf("head %s: %.4f over %zu funny sentences (%zu skipped)\n", head.str().c_str(), r.head_accuracy,
              r.sentences, r.skipped);
  std::printf("last word baseline: %.4f\n", r.last_word_accuracy);
  std::printf("POS baseline (%s): %.4f\n", std::string(to_string(tag)).c_str(), r.pos_accuracy);
  if (lm) {
    std::printf("lowest likelihood baseline: %.4f\n", r.lm_accuracy);
  } else {
    std::printf("lowest likelihood baseline: skipped (no --lm)\n");
  }
}

void cmd_replace(Context& ctx, const AnalyzeArgs& a) {
  const Corpus full = load_prepared(ctx.ws);
  const Corpus corpus = a.pairs.apply(full);
  auto m = load_transformer(ctx, a.models.at(0));
  const HeadId head = head_or_argmax(ctx, a, *m.encoder, corpus);
  PairFilter f;
  f.split = Split::train;
  auto vocabulary = corpus_vocabulary(filter(full, f));
  if (vocabulary.empty()) vocabulary = corpus_vocabulary(corpus);
  const auto items = replacement_items(corpus);
  const auto r = random_replacement_activation(*m.encoder, head, items, ctx.seed, vocabulary);
  const auto dir = ctx.ws.analysis("replace") / m.name;
  emit_replacement(dir, head, r);
  ctx.artifact(dir);
  ctx.manifest.metrics = {{"head", head.str()}, {"ratio", r.ratio}, {"items", r.items}};
  std::printf("head %s: attention on the edited positions after random replacement is %.3f of before (%zu items)\n",
              head.str().c_str(), r.ratio, r.items);
}

void cmd_mask_sweep(Context& ctx, const AnalyzeArgs& a) {
  const Corpus corpus = a.pairs.apply(load_prepared(ctx.ws));
  auto clf = HumorClassifier::load(resolve_checkpoint(ctx.ws, a.models.at(0)), ctx.cache);
  const auto sweeps = sweep_corpus(clf, corpus);
  const auto dir = ctx.ws.analysis("mask-sweep") / fs::path(a.models.at(0)).filename();
  fs::create_directories(dir);
  write_sweep_jsonl(dir / "sweeps.jsonl", sweeps);
  const auto t = flip_rate_table(sweeps);
  emit_flip_table(dir, t);
  ctx.artifact(dir);
  std::size_t unrestored = 0;
  for (const auto& s : sweeps) unrestored += !s.restored;
  ctx.manifest.metrics = {{"funny_modified", t.modified[0].rate()}, {"funny_other", t.other[0].rate()},
                          {"serious_modified", t.modified[1].rate()}, {"serious_other", t.other[1].rate()},
                          {"funny_p", t.test[0].defined ? Json(t.test[0].p_value) : Json(nullptr)},
                          {"serious_p", t.test[1].defined ? Json(t.test[1].p_value) : Json(nullptr)},
                          {"unrestored_sweeps", unrestored}};
  std::printf("%-8s %10s %10s %12s\n", "", "modified", "other", "paired p");
  for (int row = 0; row < 2; ++row) {
    std::printf("%-8s %10.3f %10.3f %12.3g\n", row == 0 ? "funny" : "serious", t.modified[row].rate(),
                t.other[row].rate(), t.test[row].p_value);
  }
}

void cmd_report(Context& ctx) {
  const Corpus corpus = load_prepared(ctx.ws);
  ctx.manifest.data_hash = data_hash(ctx.ws);
  const bool have_predictions = !read_all_outcomes(ctx.ws).empty();
  if (have_predictions) emit_tables(ctx, corpus, true, true, true, {});
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(ctx.ws.root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), ctx.ws.root);
    if (*rel.begin() == "manifests" || *rel.begin() == "models") continue;
    const auto ext = e.path().extension();
    if (ext == ".csv" || ext == ".svg" || ext == ".json" || ext == ".jsonl") files.push_back(rel.string());
  }
  std::sort(files.begin(), files.end());
  const auto index = ctx.ws.reports() / "index.md";
  fs::create_directories(index.parent_path());
  std::ofstream out(index, std::ios::trunc);
  out << "# Outputs under " << ctx.ws.root.string() << "\n\n";
  for (const auto& f : files) out << "- " << f << "\n";
  ctx.artifact(index);
  ctx.manifest.metrics = {{"files", files.size()}, {"tables_rebuilt", have_predictions}};
  std::printf("%zu output files indexed in %s\n", files.size(), index.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Humor classifiers on aligned funny/serious headline pairs, with attention and occlusion analyses"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--out", g.out, "Output root (default $PUNCHLINE_OUTPUT_ROOT or ./punchline-out)");
  app.add_option("--config", g.config, "Key-value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Top-level seed for every random choice");
  app.add_option("--model-cache", g.model_cache, "Model cache directory (default $PUNCHLINE_MODEL_CACHE)");

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Load, validate and align the pair corpus");
  prepare->add_option("--input,input", prep.input, "TSV with pair_id, funny, serious, split[, quality, humor_type]")
      ->required();
  prepare->add_option("--hq-quality", prep.hq_quality, "Quality score defining the HQ subset (default: maximum)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on the prepared corpus");
  train_cmd->add_option("--encoder", tr.encoder, "bag_of_vectors | recurrent | vanilla_transformer | pretrained_mlm");
  train_cmd->add_option("--encoder-id", tr.encoder_id, "Model-cache id of the vectors or pretrained weights");
  train_cmd->add_option("--setup", tr.setup, "1S or PS");
  train_cmd->add_flag("--frozen", tr.frozen, "Train only the head");
  train_cmd->add_option("--lr", tr.lr, "Learning rate");
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs");
  train_cmd->add_option("--patience", tr.patience, "Early-stopping patience in epochs");
  train_cmd->add_option("--recurrent-hidden", tr.recurrent_hidden);
  train_cmd->add_option("--tf-layers", tr.tf_layers, "Layers of a from-scratch transformer");
  train_cmd->add_option("--tf-heads", tr.tf_heads);
  train_cmd->add_option("--tf-hidden", tr.tf_hidden);
  train_cmd->add_option("--tf-intermediate", tr.tf_intermediate);
  train_cmd->add_option("--name", tr.name, "Checkpoint name inside the output root");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score checkpoints and likelihood baselines on the test split");
  evaluate->add_option("--model", ev.models, "Checkpoint name or directory (repeatable)");
  evaluate->add_option("--lm", ev.lms, "Causal LM id: GPT-2 directory or ARPA file (repeatable)");
  evaluate->add_flag("--table1", ev.table1, "Accuracy table over every stored prediction, Full and HQ");
  evaluate->add_flag("--table2", ev.table2, "Accuracy per humor type");
  evaluate->add_flag("--jaccard", ev.jaccard, "Accuracy vs Jaccard-distance threshold");
  evaluate->add_option("--thresholds", ev.thresholds, "Jaccard thresholds (default 0,0.1,...,0.7)")->delimiter(',');

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Attention and occlusion analyses");
  analyze->require_subcommand(1);
  auto* a_dist = analyze->add_subcommand("attention-distance", "JS distance per head: models vs a reference, funny vs serious");
  a_dist->add_option("--reference", an.reference, "Reference model (checkpoint or pretrained id)")->required();
  a_dist->add_option("--model", an.models, "Models to compare (repeatable)")->required();
  a_dist->add_flag("--save-tensors", an.save_tensors, "Also write the funny-sentence attention tensors");
  auto* a_special = analyze->add_subcommand("special-positions", "Attention received by first/last word, CLS and SEP");
  a_special->add_option("--model", an.models, "Models; the first is the comparison baseline")->required();
  auto* a_chunk = analyze->add_subcommand("chunk-maps", "Per-head attention on the edited chunk and the rest");
  a_chunk->add_option("--model", an.models, "Model")->required()->expected(1);
  auto* a_loc = analyze->add_subcommand("localize", "Predict the edited word from one head, with three baselines");
  a_loc->add_option("--model", an.models, "Model")->required()->expected(1);
  a_loc->add_option("--head", an.head, "LAYER-HEAD (default: argmax of the edited-chunk map)");
  a_loc->add_option("--lm", an.lm, "Causal LM for the lowest-likelihood baseline");
  a_loc->add_option("--pos-lexicon", an.pos_lexicon, "Extra word<TAB>TAG lexicon")->check(CLI::ExistingFile);
  a_loc->add_option("--pos-tag", an.pos_tag, "Tag for the POS baseline (default: most edited tag in train)");
  auto* a_rep = analyze->add_subcommand("replace", "Attention on edited positions after random word replacement");
  a_rep->add_option("--model", an.models, "Model")->required()->expected(1);
  a_rep->add_option("--head", an.head, "LAYER-HEAD (default: argmax of the edited-chunk map)");
  auto* a_mask = analyze->add_subcommand("mask-sweep", "Mask each word and count decision flips");
  a_mask->add_option("--model", an.models, "Single-sentence checkpoint")->required()->expected(1);
  for (auto* sub : {a_dist, a_special, a_chunk, a_loc, a_rep, a_mask}) an.pairs.add(sub);

  auto* report = app.add_subcommand("report", "Rebuild the tables and plots from stored predictions and index outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  std::optional<Context> ctx;
  try {
    ctx.emplace(make_context(g));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  ctx->manifest.argv.assign(argv, argv + argc);
  ctx->manifest.started_at = utc_timestamp();

  int status = 0;
  try {
    if (*prepare) {
      ctx->manifest.command = "prepare";
      cmd_prepare(*ctx, prep);
    } else if (*train_cmd) {
      ctx->manifest.command = "train";
      cmd_train(*ctx, tr);
    } else if (*evaluate) {
      ctx->manifest.command = "evaluate";
      cmd_evaluate(*ctx, ev);
    } else if (*analyze) {
      ctx->manifest.data_hash = data_hash(ctx->ws);
      if (*a_dist) {
        ctx->manifest.command = "analyze-attention-distance";
        cmd_attention_distance(*ctx, an);
      } else if (*a_special) {
        ctx->manifest.command = "analyze-special-positions";
        cmd_special_positions(*ctx, an);
      } else if (*a_chunk) {
        ctx->manifest.command = "analyze-chunk-maps";
        cmd_chunk_maps(*ctx, an);
      } else if (*a_loc) {
        ctx->manifest.command = "analyze-localize";
        cmd_localize(*ctx, an);
      } else if (*a_rep) {
        ctx->manifest.command = "analyze-replace";
        cmd_replace(*ctx, an);
      } else if (*a_mask) {
        ctx->manifest.command = "analyze-mask-sweep";
        cmd_mask_sweep(*ctx, an);
      }
    } else if (*report) {
      ctx->manifest.command = "report";
      cmd_report(*ctx);
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    status = 2;
    ctx->manifest.metrics = {{"error", e.what()}};
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    status = 1;
    ctx->manifest.metrics = {{"error", e.what()}};
  }
  ctx->manifest.exit_status = status;
  ctx->manifest.finished_at = utc_timestamp();
  try {
    const auto path = write_manifest(ctx->manifest, ctx->ws.root);
    std::fprintf(stderr, "manifest: %s\n", path.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: could not write the run manifest: %s\n", e.what());
    if (status == 0) status = 1;
  }
  return status;
}
