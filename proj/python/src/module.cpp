// Python bindings for the corpus, statistics, attention and occlusion
// helpers. Models are loaded from checkpoint directories written by the CLI.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "punchline/attention.hpp"
#include "punchline/classifier.hpp"
#include "punchline/corpus.hpp"
#include "punchline/evaluation.hpp"
#include "punchline/language_model.hpp"
#include "punchline/perturbation.hpp"

namespace py = pybind11;
using namespace punchline;

namespace {

py::dict pair_dict(const Corpus& c, const SentencePair& p) {
  const auto& a = c.alignment(p.pair_id);
  py::dict d;
  d["pair_id"] = p.pair_id;
  d["funny"] = p.funny;
  d["serious"] = p.serious;
  d["split"] = std::string(to_string(p.split));
  d["quality"] = p.quality;
  d["humor_type"] = p.humor_type ? py::object(py::str(std::string(to_string(*p.humor_type)))) : py::none();
  d["funny_span"] = py::make_tuple(a.funny_span.begin, a.funny_span.end);
  d["serious_span"] = py::make_tuple(a.serious_span.begin, a.serious_span.end);
  d["hq"] = c.is_hq(p.pair_id);
  return d;
}

py::array_t<float> tensor_array(const AttentionTensor& t) {
  py::array_t<float> out({t.layers, t.heads, t.seq_len, t.seq_len});
  std::copy(t.weights.begin(), t.weights.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Humor classification on aligned funny/serious headline pairs";

  py::register_exception<CorpusError>(m, "CorpusError", PyExc_ValueError);

  m.def("word_tokenize", &word_strings, py::arg("sentence"));
  m.def(
      "align",
      [](const std::string& funny, const std::string& serious) {
        const auto a = compute_token_alignment(word_strings(funny), word_strings(serious));
        return py::make_tuple(py::make_tuple(a.funny_span.begin, a.funny_span.end),
                              py::make_tuple(a.serious_span.begin, a.serious_span.end), a.widened);
      },
      py::arg("funny"), py::arg("serious"),
      "Differing word spans (half-open) of the funny and serious sentence, and whether they were widened.");
  m.def(
      "jaccard_distance",
      [](const std::string& a, const std::string& b) { return jaccard_distance(word_strings(a), word_strings(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "load_corpus",
      [](const std::filesystem::path& path) {
        const Corpus c = load_corpus(path);
        py::list out;
        for (const auto& p : c.pairs()) out.append(pair_dict(c, p));
        return out;
      },
      py::arg("path"), "Pairs of a TSV file as dicts, with their alignments.");

  m.def(
      "js_divergence",
      [](const std::vector<double>& p, const std::vector<double>& q) { return js_divergence(p, q); }, py::arg("p"),
      py::arg("q"), "Base-2 Jensen-Shannon divergence.");
  m.def(
      "bootstrap_ci",
      [](const std::vector<double>& x, int resamples, double level, std::uint64_t seed) {
        const auto ci = bootstrap_ci(x, resamples, level, seed);
        return py::make_tuple(ci.low, ci.high);
      },
      py::arg("values"), py::arg("resamples") = 1000, py::arg("level") = 0.99, py::arg("seed") = 0);

  py::class_<TTestResult>(m, "TTestResult")
      .def_readonly("t", &TTestResult::t)
      .def_readonly("df", &TTestResult::df)
      .def_readonly("p_value", &TTestResult::p_value)
      .def_readonly("defined", &TTestResult::defined)
      .def_readonly("significant", &TTestResult::significant)
      .def_readonly("mean_difference", &TTestResult::mean_difference)
      .def_readonly("n", &TTestResult::n);
  m.def(
      "paired_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b, double alpha) {
        return paired_t_test(a, b, alpha);
      },
      py::arg("a"), py::arg("b"), py::arg("alpha") = 0.01);
  m.def(
      "welch_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b, double alpha) {
        return welch_t_test(a, b, alpha);
      },
      py::arg("a"), py::arg("b"), py::arg("alpha") = 0.01);
  m.def(
      "lm_threshold_search",
      [](const std::vector<double>& logprobs, const std::vector<int>& labels) {
        if (logprobs.size() != labels.size()) throw std::invalid_argument("logprobs and labels differ in length");
        std::vector<ScoredSentence> s;
        for (std::size_t i = 0; i < logprobs.size(); ++i) s.push_back({logprobs[i], labels[i]});
        const auto r = lm_threshold_search(s);
        return py::make_tuple(r.threshold, r.train_accuracy);
      },
      py::arg("logprobs"), py::arg("labels"), "Threshold t for 'funny iff logprob < t' and its accuracy.");

  m.def(
      "read_attention_file",
      [](const std::filesystem::path& path) {
        py::dict out;
        for (const auto& t : read_attention_file(path)) out[py::str(t.sentence_id)] = tensor_array(t);
        return out;
      },
      py::arg("path"), "Tensors of a .plattn file keyed by sentence id, shaped (layers, heads, seq, seq).");

  py::class_<HumorClassifier>(m, "Classifier")
      .def_static(
          "load",
          [](const std::filesystem::path& dir, std::optional<std::filesystem::path> cache) {
            return HumorClassifier::load(dir, cache ? ModelCache(*cache) : ModelCache());
          },
          py::arg("directory"), py::arg("model_cache") = py::none())
      .def_property_readonly("name", [](const HumorClassifier& c) { return c.variant().name(); })
      .def_property_readonly("setup", [](const HumorClassifier& c) { return setup_tag(c.variant().setup); })
      .def("predict_single", &HumorClassifier::predict_single, py::arg("sentence"))
      .def("predict_pair", &HumorClassifier::predict_pair, py::arg("first"), py::arg("second"))
      .def(
          "attention",
          [](HumorClassifier& c, const std::string& sentence) {
            const auto s = extract_attention(c, "s", sentence);
            py::list positions;
            for (const auto& w : s.word_positions) positions.append(py::make_tuple(w.begin, w.end));
            return py::make_tuple(tensor_array(s.attention), s.words, positions);
          },
          py::arg("sentence"), "Attention tensor, words and each word's position range.")
      .def(
          "mask_sweep",
          [](HumorClassifier& c, const std::string& sentence, std::size_t gold_begin, std::size_t gold_end) {
            const auto r = mask_sweep(c, "s", sentence, {gold_begin, gold_end}, true);
            py::dict d;
            d["words"] = r.words;
            d["original_probability"] = r.original_probability;
            d["masked_probability"] = r.masked_probability;
            d["flipped"] = r.flipped;
            d["classifications"] = r.classifications;
            d["restored"] = r.restored;
            return d;
          },
          py::arg("sentence"), py::arg("gold_begin"), py::arg("gold_end"));
}
