#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "unicor/corpus.hpp"
#include "unicor/lexer.hpp"
#include "unicor/synth.hpp"

using namespace unicor;

TEST_CASE("synth emits n_problems x n_languages samples") {
  Corpus c = synth_corpus({50, 3, 9});
  CHECK(c.size() == 150);
  CHECK(c.languages() == std::set<std::string>{"alpha", "beta", "gamma"});
}

TEST_CASE("every problem has exactly one sample per language") {
  Corpus c = synth_corpus({20, 4, 10});
  REQUIRE(c.by_problem().size() == 20);
  for (const auto& [pid, indices] : c.by_problem()) {
    REQUIRE(indices.size() == 4);
    std::set<std::string> langs;
    for (std::size_t i : indices) langs.insert(c.samples()[i].language);
    CHECK(langs == std::set<std::string>{"alpha", "beta", "delta", "gamma"});
  }
}

TEST_CASE("same seed reproduces the corpus exactly") {
  Corpus a = synth_corpus({15, 2, 77});
  Corpus b = synth_corpus({15, 2, 77});
  CHECK(a.fingerprint() == b.fingerprint());
  Corpus c = synth_corpus({15, 2, 78});
  CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("synthetic code is well formed for its language") {
  Corpus c = synth_corpus({25, 4, 11});
  for (const Sample& s : c.samples()) {
    REQUIRE(language_supported(s.language));
    TokenSeq seq = tokenize_code(s.code, s.language);  // strict: no lex errors
    CHECK(!seq.tokens.empty());
    CHECK(brackets_balanced(seq));
    CHECK(seq.detokenize() == s.code);
  }
  // the whole corpus survives the screening pipeline untouched
  FilterResult f = filter_syntactic(c);
  CHECK(f.corpus.size() == c.size());
  CHECK(f.warnings.empty());
  CHECK(dedup(f.corpus).size() == c.size());
}

TEST_CASE("language styles keep their keyword identity") {
  Corpus c = synth_corpus({10, 4, 12});
  for (const Sample& s : c.samples()) {
    const auto& own = language_config(s.language).keywords;
    TokenSeq seq = tokenize_code(s.code, s.language);
    bool saw_keyword = false;
    for (const Token& t : seq.tokens) {
      if (t.kind == TokenKind::Keyword) {
        saw_keyword = true;
        CHECK(own.count(t.text) == 1);
      }
    }
    CHECK(saw_keyword);
  }
}

TEST_CASE("problem signal tokens are shared across a problem's languages") {
  Corpus c = synth_corpus({10, 3, 13});
  for (const auto& [pid, indices] : c.by_problem()) {
    // identifier intersection across languages contains the op stems
    std::vector<std::set<std::string>> ident_sets;
    for (std::size_t i : indices) {
      std::set<std::string> idents;
      for (const Token& t : tokenize_code(c.samples()[i].code, c.samples()[i].language).tokens)
        if (t.kind == TokenKind::Identifier) idents.insert(t.text);
      ident_sets.push_back(std::move(idents));
    }
    std::set<std::string> shared = ident_sets[0];
    for (std::size_t k = 1; k < ident_sets.size(); ++k) {
      std::set<std::string> next;
      std::set_intersection(shared.begin(), shared.end(), ident_sets[k].begin(),
                            ident_sets[k].end(), std::inserter(next, next.begin()));
      shared = std::move(next);
    }
    CHECK(shared.size() >= 2);  // at least two shared op stems
  }
}

TEST_CASE("nl descriptions are nonempty and carry the shared constant") {
  Corpus c = synth_corpus({10, 2, 14});
  for (const auto& [pid, indices] : c.by_problem()) {
    std::set<std::string> constants;
    for (std::size_t i : indices) {
      const Sample& s = c.samples()[i];
      CHECK(!s.nl.empty());
      auto pos = s.nl.find("with limit ");
      REQUIRE(pos != std::string::npos);
      constants.insert(s.nl.substr(pos));
    }
    CHECK(constants.size() == 1);  // same constant across the problem's languages
  }
}

TEST_CASE("some samples carry native comments") {
  Corpus c = synth_corpus({40, 3, 15});
  std::size_t with_comment = 0;
  for (const Sample& s : c.samples())
    if (s.comment) {
      ++with_comment;
      CHECK(s.comment->rfind("//", 0) == 0);
    }
  CHECK(with_comment > c.size() / 3);
  CHECK(with_comment < c.size());
}

TEST_CASE("language count outside 2..4 is rejected") {
  CHECK_THROWS_AS(synth_corpus({10, 1, 1}), CorpusError);
  CHECK_THROWS_AS(synth_corpus({10, 5, 1}), CorpusError);
  CHECK_THROWS_AS(synth_corpus({0, 3, 1}), CorpusError);
}
