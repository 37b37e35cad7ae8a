#pragma once

#include <csignal>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "copysample/core/dataset.hpp"
#include "copysample/oracles/oracle.hpp"

namespace copysample {

// Membership-query wire protocol, newline-delimited ASCII, strict lockstep:
//
//   server -> client   HELLO <d> <k>
//   client -> server   <x0> <x1> ... <x{d-1}>     (17 significant digits)
//   server -> client   <label>                    (integer in [0,k))
//   client -> server   BYE                        (server closes)

/// Bidirectional line channel. recv_line() strips the terminator.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void send_line(const std::string& line) = 0;
  virtual std::string recv_line() = 0;
};

/// Transport over a pair of iostreams (in-process peers, tests).
class StreamTransport final : public LineTransport {
 public:
  StreamTransport(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

  void send_line(const std::string& line) override {
    out_ << line << '\n';
    out_.flush();
    if (!out_) throw TransportError("stream transport: write failed");
  }

  std::string recv_line() override {
    std::string line;
    if (!std::getline(in_, line)) throw TransportError("stream transport: peer closed");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

 private:
  std::istream& in_;
  std::ostream& out_;
};

/// Spawns `/bin/sh -c command` and talks to it over its stdin/stdout.
///
/// SIGPIPE is ignored process-wide once a child is spawned so a dying server
/// surfaces as a TransportError instead of killing the client.
class ProcessTransport final : public LineTransport {
 public:
  explicit ProcessTransport(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw TransportError("pipe() failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw TransportError("pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw TransportError("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    out_ = fdopen(to_child[1], "w");
    in_ = fdopen(from_child[0], "r");
    if (!out_ || !in_) throw TransportError("fdopen() failed");
  }

  ProcessTransport(const ProcessTransport&) = delete;
  ProcessTransport& operator=(const ProcessTransport&) = delete;

  ~ProcessTransport() override {
    if (out_) std::fclose(out_);
    if (in_) std::fclose(in_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  void send_line(const std::string& line) override {
    if (std::fputs(line.c_str(), out_) < 0 || std::fputc('\n', out_) == EOF || std::fflush(out_) != 0) {
      throw TransportError("oracle process: write failed");
    }
  }

  std::string recv_line() override {
    std::string line;
    int c;
    while ((c = std::fgetc(in_)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
    if (c == EOF && line.empty()) throw TransportError("oracle process: closed the connection");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

 private:
  pid_t pid_ = -1;
  std::FILE* out_ = nullptr;
  std::FILE* in_ = nullptr;
};

struct Handshake {
  int dim = 0;
  int num_classes = 0;
};

inline Handshake parse_handshake(const std::string& line) {
  std::istringstream is(line);
  std::string word;
  Handshake h;
  std::string extra;
  if (!(is >> word) || word != "HELLO" || !(is >> h.dim >> h.num_classes) || (is >> extra)) {
    throw ProtocolError("malformed handshake: '" + line + "'");
  }
  if (h.dim < 1) throw ProtocolError("handshake declares d < 1: '" + line + "'");
  if (h.num_classes < 1) throw ProtocolError("handshake declares k < 1: '" + line + "'");
  return h;
}

inline Handshake external_handshake(LineTransport& transport) { return parse_handshake(transport.recv_line()); }

inline std::string format_request(const Point& z) {
  std::string line;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (i) line += ' ';
    line += csv_detail::format_double(z[i]);
  }
  return line;
}

/// Oracle served by another process or peer over the line protocol.
class ExternalOracle final : public Oracle {
 public:
  static std::unique_ptr<ExternalOracle> connect(std::unique_ptr<LineTransport> transport) {
    const Handshake h = external_handshake(*transport);
    return std::unique_ptr<ExternalOracle>(new ExternalOracle(std::move(transport), h));
  }

  static std::unique_ptr<ExternalOracle> spawn(const std::string& command) {
    return connect(std::make_unique<ProcessTransport>(command));
  }

  ~ExternalOracle() override {
    try {
      if (transport_) transport_->send_line("BYE");
    } catch (...) {
    }
  }

  bool thread_safe() const override { return false; }

  std::string describe() const override {
    return "external(d=" + std::to_string(dim()) + ", k=" + std::to_string(num_classes()) + ")";
  }

 protected:
  ClassLabel classify(const Point& z) override {
    transport_->send_line(format_request(z));
    const std::string reply = transport_->recv_line();
    int label = 0;
    auto [ptr, ec] = std::from_chars(reply.data(), reply.data() + reply.size(), label);
    if (ec != std::errc() || ptr != reply.data() + reply.size()) {
      throw ProtocolError("oracle reply is not an integer label: '" + reply + "'");
    }
    return ClassLabel(label);
  }

 private:
  ExternalOracle(std::unique_ptr<LineTransport> t, Handshake h)
      : Oracle(h.dim, h.num_classes), transport_(std::move(t)) {}

  std::unique_ptr<LineTransport> transport_;
};

/// Server side of the protocol: answers requests from `in` until BYE or EOF.
/// Malformed requests get an `ERR <reason>` line, which clients reject.
inline void serve_oracle(Oracle& oracle, std::istream& in, std::ostream& out) {
  out << "HELLO " << oracle.dim() << ' ' << oracle.num_classes() << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "BYE") break;
    std::istringstream is(line);
    Point z(oracle.dim());
    bool ok = true;
    for (int i = 0; i < oracle.dim() && ok; ++i) ok = static_cast<bool>(is >> z[i]);
    std::string extra;
    if (!ok || (is >> extra)) {
      out << "ERR expected " << oracle.dim() << " numbers\n" << std::flush;
      continue;
    }
    out << oracle.query(z).value << '\n' << std::flush;
  }
}

}  // namespace copysample
