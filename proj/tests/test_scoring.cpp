#include "detox/scoring.hpp"

#include <stdexcept>
#include <string>

#include "doctest.h"
#include "test_util.hpp"

using namespace detox;

namespace {

Lexicon two_term_lexicon() {
  Lexicon lexicon;
  lexicon.add_term("grubnix", Attribute::kToxicity, 0.6);
  lexicon.add_term("smordle", Attribute::kToxicity, 0.5);
  lexicon.add_term("snarfle", Attribute::kThreat, 0.7);
  return lexicon;
}

}  // namespace

TEST_SUITE("attributes") {
  TEST_CASE("fixed order and count") {
    const auto& attrs = all_attributes();
    REQUIRE(attrs.size() == kAttributeCount);
    CHECK(attrs.front() == Attribute::kToxicity);
    CHECK(attrs.back() == Attribute::kFlirtation);
    CHECK(attribute_name(attrs[0]) == "toxicity");
    CHECK(attribute_name(attrs[1]) == "severe_toxicity");
    CHECK(attribute_name(attrs[2]) == "identity_attack");
    CHECK(attribute_name(attrs[3]) == "insult");
    CHECK(attribute_name(attrs[4]) == "threat");
    CHECK(attribute_name(attrs[5]) == "profanity");
    CHECK(attribute_name(attrs[6]) == "sexually_explicit");
    CHECK(attribute_name(attrs[7]) == "flirtation");
  }

  TEST_CASE("wire names are upper snake case") {
    CHECK(attribute_api_name(Attribute::kToxicity) == "TOXICITY");
    CHECK(attribute_api_name(Attribute::kSevereToxicity) == "SEVERE_TOXICITY");
    CHECK(attribute_api_name(Attribute::kSexuallyExplicit) ==
          "SEXUALLY_EXPLICIT");
  }

  TEST_CASE("names round-trip through attribute_from_name") {
    for (Attribute a : all_attributes()) {
      CHECK(attribute_from_name(attribute_name(a)) == a);
      CHECK(attribute_from_name(attribute_api_name(a)) == a);
    }
    CHECK(!attribute_from_name("sarcasm").has_value());
    CHECK(!attribute_from_name("").has_value());
  }

  TEST_CASE("score validation") {
    AttributeScores ok;
    ok[Attribute::kToxicity] = 1.0;
    CHECK_NOTHROW(ok.validate());

    AttributeScores bad;
    bad[Attribute::kInsult] = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
  }
}

TEST_SUITE("classify") {
  TEST_CASE("inclusive threshold") {
    AttributeScores scores;
    scores[Attribute::kToxicity] = 0.5;
    scores[Attribute::kThreat] = 0.49;
    scores[Attribute::kFlirtation] = 0.51;

    const auto flagged = classify(scores, 0.5);
    REQUIRE(flagged.size() == 2);
    CHECK(flagged[0] == Attribute::kToxicity);   // 0.5 >= 0.5
    CHECK(flagged[1] == Attribute::kFlirtation);  // order follows attributes
  }

  TEST_CASE("threshold zero flags everything") {
    AttributeScores scores;  // all zeros
    CHECK(classify(scores, 0.0).size() == kAttributeCount);
  }

  TEST_CASE("threshold one flags only saturated scores") {
    AttributeScores scores;
    scores[Attribute::kProfanity] = 1.0;
    const auto flagged = classify(scores, 1.0);
    REQUIRE(flagged.size() == 1);
    CHECK(flagged[0] == Attribute::kProfanity);
  }

  TEST_CASE("threshold outside [0,1] is rejected") {
    AttributeScores scores;
    CHECK_THROWS_AS(classify(scores, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(classify(scores, 1.1), std::invalid_argument);
  }
}

TEST_SUITE("lexicon scoring") {
  TEST_CASE("no match scores zero everywhere") {
    const auto scores =
        score_lexicon("the quiet meadow rests", two_term_lexicon());
    for (Attribute a : all_attributes()) {
      CHECK(scores[a] == 0.0);
    }
  }

  TEST_CASE("single match scores the term weight") {
    const auto scores = score_lexicon("a grubnix appears", two_term_lexicon());
    CHECK(scores.toxicity() == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(scores[Attribute::kThreat] == 0.0);
  }

  TEST_CASE("matches combine as a saturating product") {
    // 1 - (1-0.6)(1-0.5) = 0.8, exactly representable.
    const auto scores =
        score_lexicon("grubnix and smordle", two_term_lexicon());
    CHECK(scores.toxicity() == 0.8);
  }

  TEST_CASE("repeated occurrences of one term stack") {
    // 1 - (1-0.5)^2 = 0.75.
    const auto scores =
        score_lexicon("smordle smordle", two_term_lexicon());
    CHECK(scores.toxicity() == 0.75);
  }

  TEST_CASE("attributes accumulate independently") {
    const auto scores =
        score_lexicon("grubnix snarfle", two_term_lexicon());
    CHECK(scores.toxicity() == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(scores[Attribute::kThreat] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(scores[Attribute::kInsult] == 0.0);
  }

  TEST_CASE("matching is case and whitespace insensitive") {
    const auto a = score_lexicon("GRUBNIX", two_term_lexicon());
    const auto b = score_lexicon("  grubnix\t\n", two_term_lexicon());
    CHECK(a == b);
    CHECK(a.toxicity() == doctest::Approx(0.6).epsilon(1e-12));
  }

  TEST_CASE("punctuation does not glue tokens together") {
    const auto scores = score_lexicon("grubnix!", two_term_lexicon());
    CHECK(scores.toxicity() == doctest::Approx(0.6).epsilon(1e-12));
  }

  TEST_CASE("multi-token phrases match as a contiguous window") {
    Lexicon lexicon;
    lexicon.add_term("cold wind", Attribute::kThreat, 0.4);
    CHECK(score_lexicon("a cold wind rises", lexicon)[Attribute::kThreat] ==
          doctest::Approx(0.4).epsilon(1e-12));
    CHECK(score_lexicon("cold and wind", lexicon)[Attribute::kThreat] == 0.0);
    CHECK(score_lexicon("cold", lexicon)[Attribute::kThreat] == 0.0);
  }

  TEST_CASE("substrings of other words do not match") {
    const auto scores = score_lexicon("grubnixes", two_term_lexicon());
    CHECK(scores.toxicity() == 0.0);
  }

  TEST_CASE("adding a term never lowers any score") {
    const std::string text = "grubnix in the smordle meadow";
    Lexicon base = two_term_lexicon();
    const auto before = score_lexicon(text, base);
    base.add_term("meadow", Attribute::kToxicity, 0.3);
    const auto after = score_lexicon(text, base);
    for (Attribute a : all_attributes()) {
      CHECK(after[a] >= before[a]);
    }
    CHECK(after.toxicity() > before.toxicity());
  }

  TEST_CASE("scores always land in [0,1]") {
    Lexicon lexicon;
    lexicon.add_term("x", Attribute::kToxicity, 1.0);
    const auto scores = score_lexicon("x x x x x x", lexicon);
    CHECK(scores.toxicity() == 1.0);
    CHECK_NOTHROW(scores.validate());
  }

  TEST_CASE("empty text scores zero") {
    const auto scores = score_lexicon("", two_term_lexicon());
    for (Attribute a : all_attributes()) {
      CHECK(scores[a] == 0.0);
    }
  }
}

TEST_SUITE("lexicon definition") {
  TEST_CASE("add_term validates weights") {
    Lexicon lexicon;
    CHECK_THROWS_AS(lexicon.add_term("x", Attribute::kToxicity, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(lexicon.add_term("x", Attribute::kToxicity, -0.2),
                    std::invalid_argument);
    CHECK_THROWS_AS(lexicon.add_term("x", Attribute::kToxicity, 1.2),
                    std::invalid_argument);
    CHECK_NOTHROW(lexicon.add_term("x", Attribute::kToxicity, 1.0));
  }

  TEST_CASE("add_term rejects phrases that tokenize to nothing") {
    Lexicon lexicon;
    CHECK_THROWS_AS(lexicon.add_term("   ", Attribute::kToxicity, 0.5),
                    std::invalid_argument);
  }

  TEST_CASE("duplicate terms for one attribute are rejected") {
    Lexicon lexicon;
    lexicon.add_term("grubnix", Attribute::kToxicity, 0.5);
    CHECK_THROWS_AS(lexicon.add_term("Grubnix", Attribute::kToxicity, 0.6),
                    std::invalid_argument);
    // Same phrase under a different attribute is fine.
    CHECK_NOTHROW(lexicon.add_term("grubnix", Attribute::kInsult, 0.5));
  }

  TEST_CASE("parse reads attribute -> phrase -> weight maps") {
    const auto lexicon = Lexicon::parse(R"({
      "toxicity": {"grubnix": 0.6, "smordle": 0.5},
      "threat": {"snarfle": 0.7}
    })");
    CHECK(lexicon.size() == 3);
    const auto scores = score_lexicon("grubnix smordle snarfle", lexicon);
    CHECK(scores.toxicity() == 0.8);
    CHECK(scores[Attribute::kThreat] == doctest::Approx(0.7).epsilon(1e-12));
  }

  TEST_CASE("parse entry order is the fixed attribute order") {
    // Key order in the file must not matter.
    const auto a = Lexicon::parse(
        R"({"threat": {"snarfle": 0.7}, "toxicity": {"grubnix": 0.6}})");
    const auto b = Lexicon::parse(
        R"({"toxicity": {"grubnix": 0.6}, "threat": {"snarfle": 0.7}})");
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.entries()[i].attribute == b.entries()[i].attribute);
      CHECK(a.entries()[i].tokens == b.entries()[i].tokens);
      CHECK(a.entries()[i].weight == b.entries()[i].weight);
    }
    CHECK(a.entries().front().attribute == Attribute::kToxicity);
  }

  TEST_CASE("parse rejects malformed input") {
    CHECK_THROWS_AS(Lexicon::parse("not json"), std::runtime_error);
    CHECK_THROWS_AS(Lexicon::parse("[1,2]"), std::runtime_error);
    CHECK_THROWS_WITH_AS(Lexicon::parse(R"({"sarcasm": {"x": 0.5}})"),
                         "lexicon: unknown attribute 'sarcasm'",
                         std::runtime_error);
    CHECK_THROWS_AS(Lexicon::parse(R"({"toxicity": 0.5})"),
                    std::runtime_error);
    CHECK_THROWS_AS(Lexicon::parse(R"({"toxicity": {"x": "high"}})"),
                    std::runtime_error);
    CHECK_THROWS_AS(Lexicon::parse(R"({"toxicity": {"x": 2.0}})"),
                    std::invalid_argument);
  }

  TEST_CASE("load_file reports missing files") {
    CHECK_THROWS_AS(Lexicon::load_file("/nonexistent/lexicon.json"),
                    std::runtime_error);
  }

  TEST_CASE("load_file round-trips through disk") {
    detox::testing::TempDir dir;
    const auto path = dir / "lexicon.json";
    detox::testing::write_file(path,
                               R"({"toxicity": {"grubnix": 0.6}})");
    const auto lexicon = Lexicon::load_file(path);
    CHECK(lexicon.size() == 1);
  }
}

TEST_SUITE("scorer factory") {
  TEST_CASE("lexicon mode builds a working scorer") {
    detox::testing::TempDir dir;
    const auto path = dir / "lexicon.json";
    detox::testing::write_file(path, R"({"toxicity": {"grubnix": 0.6}})");

    ScorerConfig config;
    config.mode = ScorerMode::kLexicon;
    config.lexicon_path = path;
    auto scorer = make_scorer(config);
    REQUIRE(scorer != nullptr);
    CHECK(scorer->score("grubnix").toxicity() ==
          doctest::Approx(0.6).epsilon(1e-12));
  }

  TEST_CASE("config validation") {
    ScorerConfig lexicon_config;
    lexicon_config.mode = ScorerMode::kLexicon;
    CHECK_THROWS_WITH_AS(lexicon_config.validate(),
                         "lexicon scorer requires a lexicon path",
                         std::invalid_argument);

    ScorerConfig remote_config;
    remote_config.mode = ScorerMode::kRemote;
    CHECK_THROWS_WITH_AS(remote_config.validate(),
                         "remote scorer requires an endpoint",
                         std::invalid_argument);

    remote_config.endpoint = "http://127.0.0.1:1/v1";
    remote_config.rate_limit = 0.0;
    CHECK_THROWS_AS(remote_config.validate(), std::invalid_argument);

    remote_config.rate_limit = 10.0;
    remote_config.max_attempts = 0;
    CHECK_THROWS_AS(remote_config.validate(), std::invalid_argument);
  }
}
