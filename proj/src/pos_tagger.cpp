#include "punchline/pos_tagger.hpp"

#include <array>
#include <fstream>
#include <set>
#include <stdexcept>

#include "punchline/corpus.hpp"

namespace punchline {

namespace {

constexpr std::array<std::string_view, 12> kTagNames = {"NOUN", "VERB", "ADJ",  "ADV", "PRON",  "DET",
                                                        "ADP",  "NUM",  "CONJ", "PRT", "PUNCT", "X"};

struct Seed {
  PosTag tag;
  std::string_view words;
};

// Space-separated seed lists.
constexpr std::array<Seed, 10> kSeeds = {{
    {PosTag::det, "the a an this that these those every each some any no all another both either neither "
                  "such what which whose"},
    {PosTag::pron, "i you he she it we they me him her us them his its our their my your mine yours hers ours "
                   "theirs myself yourself himself herself itself ourselves themselves who whom everyone "
                   "someone anyone nobody everybody somebody anything something nothing everything one"},
    {PosTag::adp, "of in on at by for with from about into over after before under between through during "
                  "against without amid among across behind beyond near since toward towards upon via "
                  "despite within along around past than as like"},
    {PosTag::conj, "and or but nor yet because while although though if unless whereas whether"},
    {PosTag::prt, "to not n't 's up out off down away"},
    {PosTag::adv, "very also just now still never again even only really too here there soon already ever "
                  "finally almost always often once perhaps quite rather maybe back instead forever today "
                  "tonight tomorrow yesterday nearly ago how when where why"},
    {PosTag::verb, "is are was were be been being am has have had do does did will would can could should may "
                   "might must shall says said say announces announced announce reports reported report "
                   "gets got get makes made make takes took take finds found find wants wanted want calls "
                   "called call tells told tell asks asked ask gives gave give shows showed show reveals "
                   "revealed reveal plans planned launches launched unveils unveiled releases released admits "
                   "admitted claims claimed warns warned vows vowed urges urged orders ordered kills killed "
                   "dies died wins won loses lost leaves left returns returned goes went go comes came come "
                   "sees saw see knows knew know thinks thought think feels felt feel looks looked look "
                   "becomes became become seeks sought seek hopes hoped hope needs needed need tries tried "
                   "try uses used use puts put sets set runs ran run keeps kept keep begins began begin "
                   "helps helped help buys bought buy sells sold sell pays paid pay meets met meet holds "
                   "held hold brings brought bring builds built build agrees agreed agree refuses refused "
                   "refuse decides decided decide forces forced force bans banned ban passes passed pass "
                   "signs signed sign opens opened open closes closed close cuts cut raises raised raise "
                   "falls fell fall rises rose rise hits hit eats ate eat sues sued sue arrests arrested "
                   "confirms confirmed denies denied deny blames blamed blame announces introduces "
                   "introduced introduce accuses accused accuse discovers discovered discover"},
    {PosTag::adj, "new old local national big little young good bad great small large long high low last "
                  "first next other same different best worst better worse own real whole free full "
                  "major top former final entire single certain able huge tiny poor rich early late "
                  "annual american white black red blue green dead alive nearby average public private "
                  "federal secret special recent open"},
    {PosTag::num, "zero two three four five six seven eight nine ten eleven twelve hundred thousand million "
                  "billion trillion dozen"},
    {PosTag::noun, "man woman area nation report study people time year day week world life child children "
                   "family president government company school city country state house home water car "
                   "dog cat friend wife husband mother father son daughter god money war"},
}};

bool ends_with(const std::string& w, std::string_view suffix) {
  return w.size() > suffix.size() + 1 && w.compare(w.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool all_digits(const std::string& w) {
  if (w.empty()) return false;
  for (const char c : w) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(PosTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

std::optional<PosTag> parse_pos_tag(std::string_view text) {
  std::string upper(text);
  for (char& c : upper) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  for (std::size_t i = 0; i < kTagNames.size(); ++i) {
    if (upper == kTagNames[i]) return static_cast<PosTag>(i);
  }
  return std::nullopt;
}

PosTagger::PosTagger() {
  // Later seeds do not override earlier ones, so closed classes win.
  for (const auto& seed : kSeeds) {
    std::size_t start = 0;
    const auto& list = seed.words;
    while (start < list.size()) {
      auto end = list.find(' ', start);
      if (end == std::string_view::npos) end = list.size();
      if (end > start) lexicon_.emplace(std::string(list.substr(start, end - start)), seed.tag);
      start = end + 1;
    }
  }
}

void PosTagger::load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open POS lexicon '" + path.string() + "'");
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const auto tag = tab == std::string::npos ? std::nullopt : parse_pos_tag(line.substr(tab + 1));
    if (!tag) throw std::runtime_error("POS lexicon line " + std::to_string(row) + ": expected word<TAB>TAG");
    lexicon_[line.substr(0, tab)] = *tag;
  }
}

std::optional<PosTag> PosTagger::lookup(const std::string& word) const {
  const auto it = lexicon_.find(word);
  if (it == lexicon_.end()) return std::nullopt;
  return it->second;
}

PosTag PosTagger::guess(const std::string& w) const {
  if (is_punctuation_token(w)) return PosTag::punct;
  if (all_digits(w)) return PosTag::num;
  if (ends_with(w, "ly")) return PosTag::adv;
  if (ends_with(w, "ing") || ends_with(w, "ed") || ends_with(w, "ize") || ends_with(w, "izes")) return PosTag::verb;
  for (const std::string_view s : {"ous", "ful", "ive", "able", "ible", "less", "ish", "ical", "ic", "ary", "ant", "ent"}) {
    if (ends_with(w, s)) return PosTag::adj;
  }
  return PosTag::noun;
}

std::vector<PosTag> PosTagger::tag(std::span<const std::string> words) const {
  std::vector<PosTag> tags;
  std::vector<bool> known;
  tags.reserve(words.size());
  for (const auto& w : words) {
    const auto hit = lookup(w);
    known.push_back(hit.has_value());
    tags.push_back(hit ? *hit : guess(w));
  }
  // Context: an unknown word after "to" or a modal is a verb; an unknown
  // plural-looking word between a noun/pronoun and a determiner, pronoun,
  // number or preposition reads as a present-tense verb.
  static const std::set<std::string> kModals = {"will", "would", "can", "could", "should", "may", "might", "must"};
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (known[i] || tags[i] == PosTag::punct || tags[i] == PosTag::num) continue;
    if (words[i - 1] == "to" || kModals.contains(words[i - 1])) {
      if (tags[i] == PosTag::noun) tags[i] = PosTag::verb;
      continue;
    }
    const bool plural = words[i].size() > 3 && words[i].back() == 's' && !ends_with(words[i], "ss");
    if (plural && (tags[i - 1] == PosTag::noun || tags[i - 1] == PosTag::pron) && i + 1 < words.size()) {
      const PosTag next = tags[i + 1];
      if (next == PosTag::det || next == PosTag::pron || next == PosTag::num || next == PosTag::adp ||
          next == PosTag::prt) {
        tags[i] = PosTag::verb;
      }
    }
  }
  return tags;
}

}  // namespace punchline
