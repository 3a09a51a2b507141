#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "fixtures.hpp"
#include "traitlex/bridge.hpp"
#include "traitlex/decoding.hpp"
#include "traitlex/json_util.hpp"

using namespace traitlex;

namespace {

std::string cli_path() {
  const char* bin = std::getenv("TRAITLEX_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "TRAITLEX_BIN must point at the CLI binary");
  return bin;
}

std::string judge_path() {
  const char* bin = std::getenv("FAKE_JUDGE_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "FAKE_JUDGE_BIN must point at the judge helper");
  return bin;
}

struct TempModel {
  std::filesystem::path dir;
  std::string model_path;
  Vocab vocab = fixtures::vocab();

  TempModel() {
    dir = std::filesystem::temp_directory_path() /
          ("traitlex_bridge_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    model_path = (dir / "model.json").string();
    save_ngram_model(fixtures::bigram(vocab), model_path);
  }
  ~TempModel() { std::filesystem::remove_all(dir); }
};

}  // namespace

TEST_SUITE("bridge") {

TEST_CASE("serve_logits speaks the protocol over streams") {
  Vocab v = fixtures::vocab();
  NGramModel model = fixtures::bigram(v);

  std::istringstream in(R"({"logits_for":{"context":[0,1]}})" "\n");
  std::ostringstream out;
  serve_logits(model, in, out);
  std::istringstream lines(out.str());
  std::string hello, logits;
  REQUIRE(std::getline(lines, hello));
  CHECK(hello.find("\"hello\"") != std::string::npos);
  CHECK(hello.find(v.fingerprint()) != std::string::npos);
  REQUIRE(std::getline(lines, logits));
  CHECK(logits.find("\"logits\":[") != std::string::npos);
}

TEST_CASE("serve_logits answers bad requests with an error and stops") {
  Vocab v = fixtures::vocab();
  NGramModel model = fixtures::bigram(v);
  std::istringstream in(
      R"({"logits_for":{"context":[99999]}})" "\n"
      R"({"logits_for":{"context":[0]}})" "\n");
  std::ostringstream out;
  serve_logits(model, in, out);
  std::istringstream lines(out.str());
  std::string hello, error, after;
  REQUIRE(std::getline(lines, hello));
  REQUIRE(std::getline(lines, error));
  CHECK(error.find("\"error\"") != std::string::npos);
  CHECK_FALSE(std::getline(lines, after));  // session ended

  std::istringstream in2(R"({"what":1})" "\n");
  std::ostringstream out2;
  serve_logits(model, in2, out2);
  CHECK(out2.str().find("unsupported") != std::string::npos);
}

TEST_CASE("bridge source matches the in-process model bit-exactly") {
  TempModel tm;
  NGramModel local = load_ngram_model(tm.model_path);
  BridgeSource remote("'" + cli_path() + "' serve --model '" + tm.model_path + "'");

  CHECK(remote.vocab_size() == local.vocab_size());
  CHECK(remote.vocab_fingerprint() == local.vocab_fingerprint());

  TokenSeq ctx = tokenize(tm.vocab, "i like to").ids;
  Vec a = local.next_logits(ctx);
  Vec b = remote.next_logits(ctx);
  REQUIRE(a.size() == b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  // a full steered generation through the pipe equals the local one
  BuildOutput built = build_lexicon(fixtures::corpus(), tm.vocab);
  SteeringConfig cfg;
  cfg.beta[0] = 1.0;
  RandomStream r1 = RandomStream::substream(5, 0);
  RandomStream r2 = RandomStream::substream(5, 0);
  GenerateResult ga =
      generate(local, &built.lexicon, cfg, ctx, 32, tm.vocab.eos_id(), r1);
  GenerateResult gb =
      generate(remote, &built.lexicon, cfg, ctx, 32, tm.vocab.eos_id(), r2);
  CHECK(ga.tokens == gb.tokens);
}

TEST_CASE("a peer error aborts the session") {
  TempModel tm;
  BridgeSource remote("'" + cli_path() + "' serve --model '" + tm.model_path + "'");
  TokenSeq bad = {static_cast<TokenId>(tm.vocab.size() + 100)};
  CHECK_THROWS_WITH_AS(remote.next_logits(bad), doctest::Contains("peer error"),
                       Error);
}

TEST_CASE("a silent peer surfaces as a handshake failure") {
  CHECK_THROWS_AS(BridgeSource("true"), Error);           // exits silently
  CHECK_THROWS_AS(BridgeSource("echo not-json"), Error);  // malformed hello
}

TEST_CASE("judge bridge relays prompts and texts") {
  BridgeJudge judge("'" + judge_path() + "'");
  CHECK(judge.judge("please rate [[score=4]]") ==
        "I would rate this a 4 out of 5");
  CHECK(judge.judge("[[garbage]]") == "no rating offered");
  const std::string stable = judge.judge("anything else");
  CHECK(stable == judge.judge("anything else"));
}

}  // TEST_SUITE
