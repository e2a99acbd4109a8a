#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "spot/error.hpp"
#include "spot/ngram.hpp"
#include "spot/run_config.hpp"

using namespace spot;
namespace fs = std::filesystem;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_SUITE("run_config") {
  TEST_CASE("defaults") {
    const auto cfg = RunConfig::parse("version = 1\n");
    CHECK(cfg.context_len == 24);
    CHECK(cfg.completion_len == 40);
    CHECK(cfg.out == "spot-out");
    CHECK(cfg.verbosity == "warn");
    CHECK(cfg.backends.empty());
    CHECK_FALSE(cfg.profile.has_value());
  }

  TEST_CASE("full file") {
    const auto cfg = RunConfig::parse(R"(
# evaluation settings
version = 1
default_backend = local
context_len = 512   # long range
completion_len = 128
out = results
backend.local.type = ngram
backend.local.path = models/gen.ngram
backend.far.type = remote
backend.far.endpoint = http://127.0.0.1:9000
backend.far.model = opt
backend.far.timeout_ms = 2500
backend.far.max_batch = 8
backend.far.retries = 2
backend.far.backoff_ms = 50
backend.far.vocab_size = 50272
backend.far.window = 2048
backend.far.auth_token = abc
)",
                                      "/etc/spot");
    CHECK(cfg.default_backend == "local");
    CHECK(cfg.context_len == 512);
    CHECK(cfg.completion_len == 128);
    CHECK(cfg.out == fs::path("/etc/spot/results"));
    REQUIRE(cfg.backends.size() == 2);
    const auto& local = cfg.backends.at("local");
    CHECK(local.kind == BackendSpec::Kind::ngram);
    CHECK(local.ngram_path == fs::path("/etc/spot/models/gen.ngram"));
    const auto& far = cfg.backends.at("far");
    CHECK(far.kind == BackendSpec::Kind::remote);
    CHECK(far.remote.endpoint == "http://127.0.0.1:9000");
    CHECK(far.remote.model_name == "opt");
    CHECK(far.remote.timeout.count() == 2500);
    CHECK(far.remote.max_batch == 8);
    CHECK(far.remote.max_retries == 2);
    CHECK(far.remote.initial_backoff.count() == 50);
    CHECK(*far.remote.vocab_size == 50272);
    CHECK(*far.remote.window == 2048);
    CHECK(*far.remote.auth_token == "abc");
  }

  TEST_CASE("absolute paths are kept") {
    const auto cfg = RunConfig::parse("version=1\nbackend.a.path=/models/a.ngram\n", "/etc/spot");
    CHECK(cfg.backends.at("a").ngram_path == fs::path("/models/a.ngram"));
  }

  TEST_CASE("parse errors") {
    CHECK(code_of([] { RunConfig::parse("context_len = 3\n"); }) == Errc::config_error);
    CHECK(code_of([] { RunConfig::parse("version = 2\n"); }) == Errc::config_error);
    CHECK(code_of([] { RunConfig::parse("version = 1\nnonsense\n"); }) == Errc::config_error);
    CHECK(code_of([] { RunConfig::parse("version = 1\ncontext_len = -4\n"); }) == Errc::config_error);
    CHECK(code_of([] { RunConfig::parse("version = 1\ncolour = red\n"); }) == Errc::config_error);
    CHECK(code_of([] { RunConfig::parse("version = 1\nbackend.x.type = gpu\n"); }) == Errc::config_error);
    CHECK(code_of([] { RunConfig::parse("version = 1\nbackend.x.flavour = 1\n"); }) == Errc::config_error);
    try {
      RunConfig::parse("version = 1\n\ncontext_len = lots\n");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("validation and instantiation") {
    const auto dir = fs::temp_directory_path() / "spot-tests" / "config";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto model = train_ngram(std::vector<std::string>{"a b c a b c"});
    model.save(dir / "m.ngram");
    {
      std::ofstream out(dir / "spot.conf");
      out << "version = 1\nbackend.one.type = ngram\nbackend.one.path = m.ngram\n";
    }
    const auto cfg = RunConfig::load(dir / "spot.conf");
    CHECK_NOTHROW(cfg.validate());
    const auto reg = cfg.instantiate();
    CHECK(reg.names() == std::vector<std::string>{"one"});
    CHECK(reg.get("one").vocab_size() == model.vocab_size());
    CHECK(code_of([&] { cfg.instantiate({"two"}); }) == Errc::backend_not_registered);

    auto two = cfg;
    two.backends["two"] = cfg.backends.at("one");
    CHECK(code_of([&] { two.validate(); }) == Errc::config_error);
    two.default_backend = "two";
    CHECK_NOTHROW(two.validate());
    two.default_backend = "three";
    CHECK(code_of([&] { two.validate(); }) == Errc::config_error);

    auto missing = cfg;
    missing.backends.at("one").ngram_path = dir / "nope.ngram";
    CHECK(code_of([&] { missing.validate(); }) == Errc::config_error);

    auto reserved = cfg;
    reserved.backends["human"] = cfg.backends.at("one");
    reserved.default_backend = "one";
    CHECK(code_of([&] { reserved.validate(); }) == Errc::config_error);

    auto remote = RunConfig::parse("version = 1\nbackend.r.type = remote\nbackend.r.endpoint = ftp://x\n");
    CHECK(code_of([&] { remote.validate(); }) == Errc::config_error);

    CHECK(code_of([] { RunConfig::parse("version = 1\n").validate(); }) == Errc::config_error);
    CHECK(code_of([&] { RunConfig::load(dir / "absent.conf"); }) == Errc::config_error);
  }
}
