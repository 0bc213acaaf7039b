#include <gtest/gtest.h>

#include "forge/error.hpp"
#include "forge/hash.hpp"
#include "forge/rational.hpp"
#include "forge/scale.hpp"

using namespace forge;

TEST(Hash, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Hash, DigestFieldsAreLengthPrefixed) {
  EXPECT_EQ(digest_fields({"ab", "c"}), sha256_hex("2:ab1:c"));
  EXPECT_NE(digest_fields({"ab", "c"}), digest_fields({"a", "bc"}));
}

TEST(Rational, NormalizesSignAndTerms) {
  Rational r(6, -8);
  EXPECT_EQ(r.num(), -3);
  EXPECT_EQ(r.den(), 4);
  EXPECT_EQ(r.str(), "-3/4");
  EXPECT_EQ(Rational(4, 2).str(), "2");
  EXPECT_THROW(Rational(1, 0), Error);
}

TEST(Rational, Arithmetic) {
  EXPECT_EQ(Rational(1, 2) + Rational(1, 3), Rational(5, 6));
  EXPECT_EQ(Rational(1) - Rational(2, 7), Rational(5, 7));
  EXPECT_EQ(Rational(3, 4) * Rational(2, 3), Rational(1, 2));
  EXPECT_EQ(Rational(21, 24) / Rational(7, 8), Rational(1));
  EXPECT_LT(Rational(463, 464), Rational(1));
  EXPECT_GT(Rational(7, 8), Rational(87, 100));
  EXPECT_DOUBLE_EQ(Rational(7, 8).to_double(), 0.875);
}

TEST(Rational, Parse) {
  EXPECT_EQ(Rational::parse("0.875"), Rational(7, 8));
  EXPECT_EQ(Rational::parse("5/7"), Rational(5, 7));
  EXPECT_EQ(Rational::parse("-0.5"), Rational(-1, 2));
  EXPECT_EQ(Rational::parse("3"), Rational(3));
  try {
    Rational::parse("x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(Rational, JsonRoundTrip) {
  nlohmann::json j = Rational(9, 10);
  EXPECT_EQ(j.dump(), "[9,10]");
  EXPECT_EQ(j.get<Rational>(), Rational(9, 10));
  EXPECT_EQ(nlohmann::json("0.02").get<Rational>(), Rational(1, 50));
}

TEST(ErrorCodes, RoundTripThroughText) {
  for (auto c : {ErrorCode::kInvalidArgument, ErrorCode::kNotFound, ErrorCode::kConflict,
                 ErrorCode::kInsufficientPopulation, ErrorCode::kMismatch, ErrorCode::kIo}) {
    EXPECT_EQ(parse_error_code(to_string(c)), c);
  }
}

TEST(Scale, BuiltinThresholds) {
  EXPECT_EQ(summarization_scale().max_score(), 7);
  EXPECT_EQ(summarization_scale().usefulness_threshold, 5);
  EXPECT_EQ(similarity_scale().usefulness_threshold, 4);
  EXPECT_EQ(preference_scale().usefulness_threshold, 5);
  EXPECT_EQ(summarization_scale().text(1), "An empty summary.");
  EXPECT_EQ(builtin_scale("explanation").name, "explanation");
  EXPECT_THROW(builtin_scale("nope"), Error);
}

TEST(Scale, DefineValidates) {
  EXPECT_THROW(define_scale("s", std::vector<std::string>{}, 1), Error);
  EXPECT_THROW(define_scale("s", std::vector<std::string>{"a", "a"}, 1), Error);
  EXPECT_THROW(define_scale("s", std::vector<ScaleLevel>{{1, "a"}, {3, "b"}}, 1), Error);
  try {
    define_scale("s", std::vector<std::string>{"a", "b"}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
  const auto s = define_scale("s", std::vector<std::string>{"low", "high"}, 2);
  EXPECT_EQ(s.render(), "1. low\n2. high\n");
  EXPECT_EQ(scale_from_json(to_json(s)), s);
  EXPECT_THROW(s.text(3), Error);
}
