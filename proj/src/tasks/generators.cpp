// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "promptlab/tasks/generators.hpp"

#include <array>
#include <random>

#include "promptlab/error.hpp"
#include "promptlab/rng.hpp"

namespace promptlab::tasks {

namespace {

using Words = std::span<const std::string_view>;

constexpr std::array<std::string_view, 10> kDeterminers = {
    "the", "a", "this", "that", "my", "your", "our", "his", "her", "some"};
constexpr std::array<std::string_view, 40> kAdjectives = {
    "big",   "small", "old",   "new",   "red",   "blue",  "pink",  "gray",  "gold",  "tan",
    "dark",  "quiet", "loud",  "happy", "sad",   "warm",  "cold",  "soft",  "hard",  "fast",
    "slow",  "tall",  "short", "young", "kind",  "wild",  "calm",  "clean", "heavy", "light",
    "rich",  "poor",  "sweet", "fresh", "green", "black", "white", "brown", "proud", "lazy"};
constexpr std::array<std::string_view, 50> kNouns = {
    "dog",    "cat",    "bird",   "fish",  "man",    "woman", "child",  "girl",  "boy",
    "king",   "queen",  "house",  "tree",  "river",  "road",  "city",   "town",  "hill",
    "box",    "cup",    "bag",    "jar",   "can",    "pot",   "tin",    "bin",   "door",
    "window", "table",  "chair",  "book",  "letter", "car",   "boat",   "train", "ship",
    "garden", "field",  "forest", "lake",  "song",   "story", "friend", "teacher",
    "doctor", "farmer", "horse",  "cow",   "apple",  "bread"};
constexpr std::array<std::string_view, 8> kItems = {"keys",  "pens", "coins", "cards",
                                                    "rings", "nuts", "beads", "gems"};
constexpr std::array<std::string_view, 15> kIntransitive = {
    "runs",  "sleeps", "sings", "waits", "falls",  "grows", "walks", "swims",
    "smiles", "jumps", "rests", "shines", "moves", "stays", "laughs"};
constexpr std::array<std::string_view, 25> kTransitive = {
    "sees",   "finds",  "takes", "holds",  "likes",   "wants", "makes", "carries", "opens",
    "closes", "builds", "reads", "writes", "helps",   "calls", "follows", "keeps", "buys",
    "sells",  "paints", "pulls", "pushes", "washes", "feeds",  "meets"};
constexpr std::array<std::string_view, 12> kAdverbs = {
    "slowly", "quickly", "softly", "often", "always", "never",
    "today",  "again",   "here",   "there", "gently", "early"};
constexpr std::array<std::string_view, 10> kPrepositions = {
    "near", "under", "over", "behind", "with", "into", "from", "beside", "across", "around"};
constexpr std::array<std::string_view, 10> kNumbers = {"one", "two",   "three", "four", "five",
                                                       "six", "seven", "eight", "nine", "ten"};
constexpr std::array<std::string_view, 5> kConjunctions = {"and", "but", "then", "so", "while"};
constexpr std::array<std::string_view, 8> kFunctionWords = {"has",  "is", "what", "in",
                                                            "how", "many", "are", "was"};

// QA entity parts are subsets of the adjective / noun lists.
constexpr std::array<std::string_view, 6> kColors = {"red", "blue", "pink", "gray", "gold", "tan"};
constexpr std::array<std::string_view, 8> kContainers = {"box", "cup", "bag", "jar",
                                                         "can", "pot", "tin", "bin"};

const std::vector<std::string_view>& lexicon_storage() {
  static const std::vector<std::string_view> words = [] {
    std::vector<std::string_view> w;
    auto add = [&](Words ws) {
      for (auto x : ws) w.push_back(x);
    };
    add(kDeterminers);
    add(kAdjectives);
    add(kNouns);
    add(kItems);
    add(kIntransitive);
    add(kTransitive);
    add(kAdverbs);
    add(kPrepositions);
    add(kNumbers);
    add(kConjunctions);
    add(kFunctionWords);
    return w;
  }();
  return words;
}

// Zipf weights 1/(rank+1) within one slot.
std::string_view zipf_pick(Words words, Rng& rng) {
  std::vector<double> w(words.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
  return words[dist(rng)];
}

std::string_view uniform_pick(Words words, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, words.size() - 1);
  return words[dist(rng)];
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

std::string noun_phrase(Rng& rng) {
  std::string s(zipf_pick(kDeterminers, rng));
  if (coin(rng, 0.5)) (s += ' ') += zipf_pick(kAdjectives, rng);
  (s += ' ') += zipf_pick(kNouns, rng);
  return s;
}

std::string sentence(Rng& rng) {
  std::uniform_int_distribution<int> tmpl(0, 6);
  std::string s;
  auto w = [&](std::string_view x) { (s += ' ') += x; };
  s = noun_phrase(rng);
  switch (tmpl(rng)) {
    case 0:
      w(zipf_pick(kIntransitive, rng));
      if (coin(rng, 0.6)) w(zipf_pick(kAdverbs, rng));
      break;
    case 1:
      w(zipf_pick(kTransitive, rng));
      w(noun_phrase(rng));
      break;
    case 2:
      w(zipf_pick(kTransitive, rng));
      w(noun_phrase(rng));
      w(zipf_pick(kPrepositions, rng));
      w(noun_phrase(rng));
      break;
    case 3:
      w("is");
      w(zipf_pick(kAdjectives, rng));
      break;
    case 4:
      w("has");
      w(zipf_pick(kNumbers, rng));
      w(zipf_pick(kItems, rng));
      break;
    case 5:
      w(zipf_pick(kIntransitive, rng));
      w(zipf_pick(kPrepositions, rng));
      w(noun_phrase(rng));
      break;
    default:
      w(zipf_pick(kTransitive, rng));
      w(noun_phrase(rng));
      w(zipf_pick(kConjunctions, rng));
      w(noun_phrase(rng));
      w(zipf_pick(kIntransitive, rng));
      break;
  }
  s += '.';
  return s;
}

struct Fact {
  std::string entity;
  std::string attribute;
};

// Two facts about distinct containers.
std::pair<Fact, Fact> two_facts(Rng& rng) {
  auto make = [&] {
    Fact f;
    f.entity = std::string(uniform_pick(kColors, rng)) + " " + std::string(uniform_pick(kContainers, rng));
    f.attribute = std::string(uniform_pick(kNumbers, rng)) + " " + std::string(uniform_pick(kItems, rng));
    return f;
  };
  Fact a = make();
  Fact b = make();
  while (b.entity == a.entity) b = make();
  return {a, b};
}

std::string fact_text(const Fact& f) { return f.entity + " has " + f.attribute + "."; }

enum class QaPhrasing { kBare, kWhatIsIn, kHowMany };

Example qa_example(Rng& rng, QaPhrasing phrasing) {
  auto [a, b] = two_facts(rng);
  const bool ask_first = coin(rng, 0.5);
  const Fact& target = ask_first ? a : b;
  Example ex;
  ex.task = TaskId::kQa;
  ex.context = fact_text(a) + " " + fact_text(b);
  switch (phrasing) {
    case QaPhrasing::kBare:
      ex.question = target.entity;
      ex.answer = target.attribute;
      break;
    case QaPhrasing::kWhatIsIn:
      ex.question = "what is in " + target.entity;
      ex.answer = target.attribute;
      break;
    case QaPhrasing::kHowMany:
      ex.question = "how many in " + target.entity;
      ex.answer = target.attribute.substr(0, target.attribute.find(' '));
      break;
  }
  return ex;
}

long long random_operand(Rng& rng, unsigned max_digits) {
  std::uniform_int_distribution<unsigned> digits(1, max_digits);
  const unsigned nd = digits(rng);
  long long lo = 1;
  for (unsigned i = 1; i < nd; ++i) lo *= 10;
  const long long hi = lo * 10 - 1;
  return std::uniform_int_distribution<long long>(nd == 1 ? 0 : lo, hi)(rng);
}

Example arith_example(Rng& rng, unsigned max_digits) {
  const long long x = random_operand(rng, max_digits);
  const long long y = random_operand(rng, max_digits);
  const int op = std::uniform_int_distribution<int>(0, 2)(rng);
  const char sym = op == 0 ? '+' : (op == 1 ? '-' : '*');
  const long long r = op == 0 ? x + y : (op == 1 ? x - y : x * y);
  Example ex;
  ex.task = TaskId::kArith;
  ex.question = std::to_string(x) + sym + std::to_string(y) + "=";
  ex.answer = std::to_string(r);
  return ex;
}

}  // namespace

std::span<const std::string_view> lexicon() { return lexicon_storage(); }

Dataset gen_lm_corpus(std::uint64_t seed, std::size_t n_sentences) {
  if (n_sentences == 0) throw ConfigError("gen_lm_corpus needs n >= 1");
  Rng rng(derive_seed(seed, "lm"));
  Dataset out;
  out.reserve(n_sentences);
  while (out.size() < n_sentences) {
    std::string s = sentence(rng);
    if (s.size() < kMinSentenceChars || s.size() > kMaxSentenceChars) continue;
    out.push_back(Example{TaskId::kLm, std::move(s), {}, {}});
  }
  return out;
}

Dataset gen_qa_dataset(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw ConfigError("gen_qa_dataset needs n >= 1");
  Rng rng(derive_seed(seed, "qa"));
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(qa_example(rng, QaPhrasing::kBare));
  return out;
}

Dataset gen_arith_dataset(std::uint64_t seed, std::size_t n, unsigned max_digits) {
  if (n == 0) throw ConfigError("gen_arith_dataset needs n >= 1");
  if (max_digits == 0 || max_digits > 6) throw ConfigError("arith digit range must be in [1, 6]");
  Rng rng(derive_seed(seed, "arith"));
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(arith_example(rng, max_digits));
  return out;
}

Dataset gen_pretrain_corpus(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw ConfigError("gen_pretrain_corpus needs n >= 1");
  Rng rng(derive_seed(seed, "pretrain"));
  std::discrete_distribution<int> source({0.60, 0.15, 0.10, 0.15});
  Dataset out;
  out.reserve(n);
  while (out.size() < n) {
    switch (source(rng)) {
      case 0: {
        std::string s = sentence(rng);
        if (s.size() < kMinSentenceChars || s.size() > kMaxSentenceChars) continue;
        out.push_back(Example{TaskId::kLm, std::move(s), {}, {}});
        break;
      }
      case 1: out.push_back(qa_example(rng, QaPhrasing::kWhatIsIn)); break;
      case 2: out.push_back(qa_example(rng, QaPhrasing::kHowMany)); break;
      default: out.push_back(arith_example(rng, 3)); break;
    }
  }
  return out;
}

}  // namespace promptlab::tasks
