#include "detox/tokens.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "doctest.h"

using namespace detox;

TEST_SUITE("tokenize") {
  TEST_CASE("splits on whitespace and lowercases") {
    CHECK(tokenize("The  Quick\tbrown\nFOX") ==
          std::vector<std::string>{"the", "quick", "brown", "fox"});
  }

  TEST_CASE("punctuation becomes single-character tokens") {
    CHECK(tokenize("Hello, world!") ==
          std::vector<std::string>{"hello", ",", "world", "!"});
    CHECK(tokenize("a-b") == std::vector<std::string>{"a", "-", "b"});
    CHECK(tokenize("(x)") == std::vector<std::string>{"(", "x", ")"});
  }

  TEST_CASE("empty and whitespace-only text yields no tokens") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("  \t\n ").empty());
  }

  TEST_CASE("non-ascii bytes pass through untouched") {
    const auto tokens = tokenize("caf\xc3\xa9 time");
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0] == "caf\xc3\xa9");
    CHECK(tokens[1] == "time");
  }

  TEST_CASE("whitespace formatting never changes the token stream") {
    const std::string compact = "one two , three";
    const std::string spread = "  one\t\ttwo ,\n three  ";
    CHECK(tokenize(compact) == tokenize(spread));
  }

  TEST_CASE("detokenize joins with single spaces") {
    const std::vector<std::string> tokens{"a", ",", "b"};
    CHECK(detokenize(tokens) == "a , b");
    CHECK(detokenize(std::vector<std::string>{}) == "");
  }

  TEST_CASE("detokenize(tokenize(x)) is a fixed point of tokenize") {
    const std::string text = "The miller, who GRINDS grain!";
    const auto once = tokenize(text);
    CHECK(tokenize(detokenize(once)) == once);
  }
}

TEST_SUITE("vocabulary") {
  TEST_CASE("reserved ids are fixed") {
    Vocabulary vocab;
    CHECK(vocab.size() == 2);
    CHECK(vocab.token(Vocabulary::kBosId) == "<s>");
    CHECK(vocab.token(Vocabulary::kUnkId) == "<unk>");
  }

  TEST_CASE("add returns the existing id for duplicates") {
    Vocabulary vocab;
    const TokenId a = vocab.add("alpha");
    CHECK(vocab.add("alpha") == a);
    CHECK(vocab.size() == 3);
  }

  TEST_CASE("token lookup throws past the end") {
    Vocabulary vocab;
    CHECK_THROWS_AS((void)vocab.token(99), std::out_of_range);
  }

  TEST_CASE("encode maps unknown words to the unk id") {
    Vocabulary vocab;
    const TokenId a = vocab.add("a");
    const std::vector<std::string> words{"a", "mystery"};
    const TokenSequence ids = vocab.encode(words);
    CHECK(ids == TokenSequence{a, Vocabulary::kUnkId});
  }

  TEST_CASE("decode round-trips known tokens") {
    Vocabulary vocab;
    vocab.add("a");
    vocab.add("b");
    const std::vector<std::string> words{"a", "b", "a"};
    CHECK(vocab.decode(vocab.encode(words)) == "a b a");
  }
}

TEST_SUITE("vocab building") {
  TEST_CASE("ids are frequency-ranked after the reserved slots") {
    // corpus [["a","b"],["a"]]: "a" is more frequent than "b".
    const Vocabulary vocab = build_vocab({{"a", "b"}, {"a"}}, 100);
    CHECK(vocab.size() == 4);
    CHECK(vocab.find("a") == TokenId{2});
    CHECK(vocab.find("b") == TokenId{3});
    CHECK(vocab.token(0) == "<s>");
    CHECK(vocab.token(1) == "<unk>");
  }

  TEST_CASE("overflow tokens map to unk") {
    // max size 3 keeps one real slot; lexicographic tie-break keeps "x".
    const Vocabulary vocab = build_vocab({{"x"}, {"y"}}, 3);
    CHECK(vocab.size() == 3);
    CHECK(vocab.find("x") == TokenId{2});
    CHECK(!vocab.find("y").has_value());
    CHECK(vocab.id_or_unk("y") == Vocabulary::kUnkId);
  }

  TEST_CASE("frequency beats lexicographic order") {
    const Vocabulary vocab = build_vocab({{"zz", "zz", "aa"}}, 4);
    CHECK(vocab.find("zz") == TokenId{2});
    CHECK(vocab.find("aa") == TokenId{3});
  }

  TEST_CASE("ties break lexicographically") {
    const Vocabulary vocab = build_vocab({{"beta", "alpha"}}, 4);
    CHECK(vocab.find("alpha") == TokenId{2});
    CHECK(vocab.find("beta") == TokenId{3});
  }

  TEST_CASE("empty corpus is an error") {
    VocabBuilder builder;
    CHECK_THROWS_WITH_AS(builder.build(10), "empty corpus", std::runtime_error);
    CHECK_THROWS_AS(build_vocab({}, 10), std::runtime_error);
  }

  TEST_CASE("max_size below the reserved tokens is an error") {
    CHECK_THROWS_AS(build_vocab({{"a"}}, 1), std::invalid_argument);
  }

  TEST_CASE("reserved literals in the corpus never take a slot") {
    const Vocabulary vocab = build_vocab({{"<s>", "<unk>", "word"}}, 3);
    CHECK(vocab.size() == 3);
    CHECK(vocab.find("word") == TokenId{2});
  }

  TEST_CASE("builder counts sequences and instances") {
    VocabBuilder builder;
    const std::vector<std::string> s1{"a", "b"};
    const std::vector<std::string> s2{"a"};
    builder.add_sequence(s1);
    builder.add_sequence(s2);
    CHECK(builder.sequences_seen() == 2);
    CHECK(builder.token_instances() == 3);
    CHECK(builder.distinct_tokens() == 2);
  }

  TEST_CASE("identical corpora build identical vocabularies") {
    std::mt19937_64 rng(11);
    std::vector<std::vector<std::string>> corpus;
    for (int i = 0; i < 50; ++i) {
      std::vector<std::string> seq;
      for (int j = 0; j < 20; ++j) {
        seq.push_back("w" + std::to_string(rng() % 30));
      }
      corpus.push_back(std::move(seq));
    }
    const Vocabulary a = build_vocab(corpus, 25);
    const Vocabulary b = build_vocab(corpus, 25);
    CHECK(a == b);
    CHECK(a.size() == 25);
  }
}
