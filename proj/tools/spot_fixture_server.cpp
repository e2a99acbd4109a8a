// Loopback inference server speaking the rank wire protocol, for protocol
// tests and local demos. Serves an n-gram model file or a canned payload.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "spot/error.hpp"
#include "spot/fixture_server.hpp"
#include "spot/ngram.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Fixture server for the spot rank protocol"};
  std::string host = "127.0.0.1";
  int port = 0;
  std::optional<std::string> ngram_path;
  std::optional<std::string> canned_path;
  spot::FixtureServerOptions opts;
  int delay_ms = 0;
  cli.add_option("--host", host, "Bind address");
  cli.add_option("--port", port, "Port (0 picks a free one)");
  cli.add_option("--ngram", ngram_path, "Serve this n-gram model file");
  cli.add_option("--canned", canned_path, "Answer every rank query with this file's bytes");
  cli.add_option("--model", opts.model_name, "Served model name");
  cli.add_option("--vocab-size", opts.vocab_size, "Vocabulary size reported without a model");
  cli.add_option("--window", opts.window, "Window reported without a model");
  cli.add_option("--delay-ms", delay_ms, "Sleep before answering each query");
  cli.add_option("--auth-token", opts.auth_token, "Require this bearer token");
  CLI11_PARSE(cli, argc, argv);

  try {
    std::optional<spot::NgramModel> model;
    if (ngram_path) {
      model.emplace(spot::NgramModel::load(*ngram_path));
      opts.backend = &*model;
    }
    if (canned_path) {
      std::ifstream in(*canned_path, std::ios::binary);
      if (!in) throw spot::Error(spot::Errc::io_error, "io error: cannot read " + *canned_path);
      std::ostringstream ss;
      ss << in.rdbuf();
      opts.canned_ranks_body = ss.str();
    }
    if (!opts.backend && !opts.canned_ranks_body) {
      std::cerr << "spot-fixture-server: need --ngram or --canned\n";
      return 2;
    }
    opts.delay = std::chrono::milliseconds(delay_ms);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    spot::FixtureServer server(opts);
    server.start(host, port);
    std::cout << "listening on " << server.endpoint() << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "spot-fixture-server: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
