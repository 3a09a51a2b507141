#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include "traitlex/decoding.hpp"
#include "traitlex/eval.hpp"
#include "traitlex/ngram.hpp"

namespace traitlex {

// Child process with line-buffered stdio pipes. The command runs under
// /bin/sh -c.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  void write_line(std::string_view line);
  // False at EOF (child closed its stdout).
  bool read_line(std::string& out);
  void close_stdin();
  int wait();

 private:
  int pid_ = -1;
  int in_fd_ = -1;   // child's stdin (we write)
  int out_fd_ = -1;  // child's stdout (we read)
  std::string buffer_;
  bool waited_ = false;
  int exit_status_ = -1;
};

// DistributionSource served by a child process speaking line-delimited JSON:
//   peer -> {"hello":{"vocab_size":N,"vocab_fingerprint":"..."}}  (once)
//   us   -> {"logits_for":{"context":[ids]}}
//   peer -> {"logits":[N floats]}
// Any {"error":"..."} from the peer aborts the session.
class BridgeSource final : public DistributionSource {
 public:
  explicit BridgeSource(const std::string& command);

  Eigen::Index vocab_size() const override { return vocab_size_; }
  const std::string& vocab_fingerprint() const override { return fingerprint_; }
  Vec next_logits(std::span<const TokenId> context) override;

 private:
  std::unique_ptr<Subprocess> child_;
  Eigen::Index vocab_size_ = 0;
  std::string fingerprint_;
};

// Judge over the same wire: {"judge":{"prompt":"..."}} -> {"text":"..."}.
class BridgeJudge final : public JudgeClient {
 public:
  explicit BridgeJudge(const std::string& command);
  std::string judge(const std::string& prompt) override;

 private:
  std::unique_ptr<Subprocess> child_;
};

// Peer side of the logits protocol; used by the `serve` subcommand. Returns
// when the input stream closes or after responding with an error.
void serve_logits(NGramModel& model, std::istream& in, std::ostream& out);

}  // namespace traitlex
