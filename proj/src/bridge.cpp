#include "traitlex/bridge.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include <cerrno>
#include <cstring>
#include <istream>
#include <ostream>

#include "traitlex/json_util.hpp"

namespace traitlex {

namespace {

using nlohmann::json;

[[noreturn]] void throw_errno(const std::string& what) {
  throw Error(what + ": " + std::strerror(errno));
}

}  // namespace

Subprocess::Subprocess(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw_errno("pipe");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw_errno("pipe");
  }
  const int pid = ::fork();
  if (pid < 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    throw_errno("fork");
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  pid_ = pid;
  in_fd_ = to_child[1];
  out_fd_ = from_child[0];
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::signal(SIGPIPE, SIG_IGN);  // a dead peer surfaces as a write error instead
}

Subprocess::~Subprocess() {
  close_stdin();
  if (out_fd_ >= 0) ::close(out_fd_);
  if (pid_ >= 0 && !waited_) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

void Subprocess::write_line(std::string_view line) {
  if (in_fd_ < 0) throw Error("bridge: child stdin already closed");
  std::string buf(line);
  buf += '\n';
  std::size_t off = 0;
  while (off < buf.size()) {
    const ssize_t n = ::write(in_fd_, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("bridge: write to child");
    }
    off += static_cast<std::size_t>(n);
  }
}

bool Subprocess::read_line(std::string& out) {
  out.clear();
  while (true) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      out.assign(buffer_, 0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    char chunk[4096];
    const ssize_t n = ::read(out_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("bridge: read from child");
    }
    if (n == 0) {
      if (buffer_.empty()) return false;
      out.swap(buffer_);
      return true;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void Subprocess::close_stdin() {
  if (in_fd_ >= 0) {
    ::close(in_fd_);
    in_fd_ = -1;
  }
}

int Subprocess::wait() {
  if (!waited_ && pid_ >= 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
    exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    waited_ = true;
  }
  return exit_status_;
}

namespace {

json expect_response(Subprocess& child, const char* context) {
  std::string line;
  while (child.read_line(line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw Error(std::string("bridge: malformed line from peer during ") +
                  context + ": " + line.substr(0, 200));
    if (j.contains("error"))
      throw Error("bridge: peer error during " + std::string(context) + ": " +
                  j["error"].get<std::string>());
    return j;
  }
  throw Error(std::string("bridge: peer closed the stream during ") + context);
}

}  // namespace

BridgeSource::BridgeSource(const std::string& command)
    : child_(std::make_unique<Subprocess>(command)) {
  json hello = expect_response(*child_, "handshake");
  if (!hello.contains("hello"))
    throw Error("bridge: expected hello, got: " + hello.dump().substr(0, 200));
  vocab_size_ = hello["hello"].at("vocab_size").get<Eigen::Index>();
  fingerprint_ = hello["hello"].at("vocab_fingerprint").get<std::string>();
  if (vocab_size_ <= 0) throw Error("bridge: peer reported empty vocabulary");
}

Vec BridgeSource::next_logits(std::span<const TokenId> context) {
  JsonWriter w;
  w.begin_object().key("logits_for").begin_object().key("context").begin_array();
  for (TokenId id : context) w.value(std::int64_t{id});
  w.end_array().end_object().end_object();
  child_->write_line(w.str());
  json resp = expect_response(*child_, "logits_for");
  if (!resp.contains("logits"))
    throw Error("bridge: expected logits, got: " + resp.dump().substr(0, 200));
  const auto& arr = resp["logits"];
  if (static_cast<Eigen::Index>(arr.size()) != vocab_size_)
    throw Error("bridge: peer returned " + std::to_string(arr.size()) +
                " logits, expected " + std::to_string(vocab_size_));
  Vec logits(vocab_size_);
  for (Eigen::Index i = 0; i < vocab_size_; ++i)
    logits[i] = arr[static_cast<std::size_t>(i)].get<double>();
  return logits;
}

BridgeJudge::BridgeJudge(const std::string& command)
    : child_(std::make_unique<Subprocess>(command)) {
  json hello = expect_response(*child_, "handshake");
  if (!hello.contains("hello"))
    throw Error("bridge: expected hello, got: " + hello.dump().substr(0, 200));
}

std::string BridgeJudge::judge(const std::string& prompt) {
  JsonWriter w;
  w.begin_object().key("judge").begin_object().key("prompt").value(prompt)
      .end_object().end_object();
  child_->write_line(w.str());
  json resp = expect_response(*child_, "judge");
  if (!resp.contains("text"))
    throw Error("bridge: expected text, got: " + resp.dump().substr(0, 200));
  return resp["text"].get<std::string>();
}

void serve_logits(NGramModel& model, std::istream& in, std::ostream& out) {
  {
    JsonWriter w;
    w.begin_object().key("hello").begin_object()
        .key("vocab_size").value(static_cast<std::int64_t>(model.vocab_size()))
        .key("vocab_fingerprint").value(model.vocab_fingerprint())
        .end_object().end_object();
    out << w.str() << '\n' << std::flush;
  }
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json req = json::parse(line, nullptr, false);
    std::string error;
    if (req.is_discarded() || !req.is_object()) {
      error = "malformed request";
    } else if (req.contains("logits_for")) {
      try {
        TokenSeq context;
        for (const auto& id : req["logits_for"].at("context")) {
          const auto v = id.get<std::int64_t>();
          if (v < 0 || v >= model.vocab_size()) throw Error("context id out of range");
          context.push_back(static_cast<TokenId>(v));
        }
        const Vec logits = model.next_logits(context);
        JsonWriter w;
        w.begin_object().key("logits").begin_array();
        for (Eigen::Index i = 0; i < logits.size(); ++i) w.value(logits[i]);
        w.end_array().end_object();
        out << w.str() << '\n' << std::flush;
        continue;
      } catch (const std::exception& e) {
        error = e.what();
      }
    } else {
      error = "unsupported request";
    }
    JsonWriter w;
    w.begin_object().key("error").value(error).end_object();
    out << w.str() << '\n' << std::flush;
    return;  // an error response ends the session
  }
}

}  // namespace traitlex
