#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include <unistd.h>

#include "actsub/error.hpp"
#include "actsub/store.hpp"
#include "oracles.hpp"

using namespace actsub;
using namespace actsub::store;
using linalg::Mat;
using linalg::Vec;

namespace {

std::vector<std::byte> bytes_of(std::initializer_list<int> values) {
  std::vector<std::byte> out;
  for (int v : values) out.push_back(static_cast<std::byte>(v));
  return out;
}

void put_u64(std::vector<std::byte>& b, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b[at + i] = static_cast<std::byte>((v >> (8 * i)) & 0xff);
}

template <typename F>
FormatError format_error_of(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e;
  }
  FAIL("expected a FormatError");
  return FormatError(FormatErrorKind::kGarbled, 0, "");
}

ActbFile small_actb(bool labels) {
  ActbFile f;
  f.rows = 2;
  f.cols = 3;
  f.values = {1.0f, -2.5f, 0.125f, 3e-8f, 1e30f, -0.0f};
  if (labels) f.labels = std::vector<std::uint32_t>{7, 0xffffffffu};
  return f;
}

WgtFile small_wgt(bool bias) {
  WgtFile f;
  f.classes = 2;
  f.features = 2;
  f.weights = {0.5f, -1.0f, 2.0f, 4.0f};
  if (bias) f.bias = std::vector<float>{0.25f, -0.75f};
  return f;
}

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("actsub_store_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("ACTB byte layout") {
  const auto b = encode_actb(small_actb(true));
  REQUIRE(b.size() == kActbHeaderSize + 6 * 4 + 2 * 4);
  CHECK(std::memcmp(b.data(), "ACTB", 4) == 0);
  CHECK(b[4] == std::byte{1});
  CHECK(b[8] == std::byte{2});
  CHECK(b[16] == std::byte{3});
  CHECK(b[24] == std::byte{1});
  // first payload float 1.0f = 0x3f800000 little-endian
  CHECK(b[25] == std::byte{0x00});
  CHECK(b[28] == std::byte{0x3f});
  CHECK(b[27] == std::byte{0x80});
  CHECK(b[49] == std::byte{7});
}

TEST_CASE("ACTB and WGT1 round trip") {
  for (bool flag : {false, true}) {
    const auto a = encode_actb(small_actb(flag));
    const ActbFile back = decode_actb(a);
    CHECK(back.values == small_actb(flag).values);
    CHECK(back.labels == small_actb(flag).labels);
    CHECK(encode_actb(back) == a);

    const auto w = encode_wgt(small_wgt(flag));
    const WgtFile wb = decode_wgt(w);
    CHECK(wb.weights == small_wgt(flag).weights);
    CHECK(wb.bias == small_wgt(flag).bias);
    CHECK(encode_wgt(wb) == w);
  }
}

TEST_CASE("randomized round trips are bitwise") {
  std::mt19937_64 rng(127);
  std::uniform_int_distribution<std::uint32_t> bits;
  for (int t = 0; t < 200; ++t) {
    ActbFile a;
    a.rows = oracle::uniform(rng, 0, 6);
    a.cols = oracle::uniform(rng, 0, 6);
    for (std::size_t i = 0; i < a.rows * a.cols; ++i) {
      float f;
      do {
        const std::uint32_t u = bits(rng);
        std::memcpy(&f, &u, 4);
      } while (!std::isfinite(f));
      a.values.push_back(f);
    }
    if (t % 2) {
      a.labels.emplace();
      for (std::size_t i = 0; i < a.rows; ++i) a.labels->push_back(bits(rng));
    }
    const auto enc = encode_actb(a);
    CHECK(encode_actb(decode_actb(enc)) == enc);

    WgtFile w;
    w.classes = oracle::uniform(rng, 1, 5);
    w.features = oracle::uniform(rng, 1, 5);
    for (std::size_t i = 0; i < w.classes * w.features; ++i) w.weights.push_back(static_cast<float>(bits(rng) % 1000) / 7.0f);
    if (t % 3 == 0) w.bias = std::vector<float>(w.classes, -1.5f);
    const auto wenc = encode_wgt(w);
    CHECK(encode_wgt(decode_wgt(wenc)) == wenc);

    RunConfig cfg;
    cfg.k = t % 4 ? std::optional<std::size_t>(oracle::uniform(rng, 0, 100)) : std::nullopt;
    cfg.lambda = t % 5 ? std::optional<double>(std::uniform_real_distribution<double>(0, 3)(rng)) : std::nullopt;
    cfg.shaping_p = std::uniform_real_distribution<double>(0, 0.99)(rng);
    cfg.seed = bits(rng);
    cfg.clamp_value = t % 2 ? std::optional<double>(std::normal_distribution<double>()(rng)) : std::nullopt;
    const std::string text = format_run_config(cfg);
    CHECK(parse_run_config(text) == cfg);
    CHECK(format_run_config(parse_run_config(text)) == text);
  }
}

TEST_CASE("reader errors") {
  auto bad = encode_actb(small_actb(false));
  std::memcpy(bad.data(), "XXXX", 4);
  FormatError e = format_error_of([&] { decode_actb(bad); });
  CHECK(e.kind() == FormatErrorKind::kBadMagic);
  CHECK(e.position() == 0);

  auto ver = encode_actb(small_actb(false));
  ver[4] = std::byte{2};
  e = format_error_of([&] { decode_actb(ver); });
  CHECK(e.kind() == FormatErrorKind::kBadVersion);
  CHECK(e.position() == 4);

  auto big = encode_actb(small_actb(false));
  put_u64(big, 8, 1000);
  e = format_error_of([&] { decode_actb(big); });
  CHECK(e.kind() == FormatErrorKind::kTruncated);
  CHECK(e.position() == kActbHeaderSize);

  auto huge = encode_actb(small_actb(false));
  put_u64(huge, 8, std::uint64_t{1} << 40);
  put_u64(huge, 16, std::uint64_t{1} << 40);
  e = format_error_of([&] { decode_actb(huge); });
  CHECK(e.kind() == FormatErrorKind::kGarbled);

  auto flag = encode_actb(small_actb(false));
  flag[24] = std::byte{2};
  CHECK(format_error_of([&] { decode_actb(flag); }).kind() == FormatErrorKind::kGarbled);

  auto trailing = encode_actb(small_actb(false));
  trailing.push_back(std::byte{0});
  e = format_error_of([&] { decode_actb(trailing); });
  CHECK(e.kind() == FormatErrorKind::kGarbled);
  CHECK(e.position() == trailing.size() - 1);

  auto nan = encode_actb(small_actb(false));
  const float q = std::nanf("");
  std::memcpy(nan.data() + kActbHeaderSize + 4 * 4, &q, 4);
  e = format_error_of([&] { decode_actb(nan); });
  CHECK(e.kind() == FormatErrorKind::kNonFinitePayload);
  CHECK(e.position() == 4);

  auto wnan = encode_wgt(small_wgt(true));
  const float inf = INFINITY;
  std::memcpy(wnan.data() + wnan.size() - 4, &inf, 4);
  e = format_error_of([&] { decode_wgt(wnan); });
  CHECK(e.kind() == FormatErrorKind::kNonFinitePayload);
  CHECK(e.position() == 5);

  CHECK(format_error_of([&] { decode_wgt(bytes_of({'W', 'G', 'T'})); }).kind() == FormatErrorKind::kTruncated);
  CHECK(format_error_of([&] { decode_wgt(encode_actb(small_actb(false))); }).kind() == FormatErrorKind::kBadMagic);
}

TEST_CASE("every truncation is rejected with a typed error") {
  for (const auto& full : {encode_actb(small_actb(true)), encode_actb(small_actb(false)), encode_wgt(small_wgt(true)),
                           encode_wgt(small_wgt(false))}) {
    const bool is_actb = std::memcmp(full.data(), "ACTB", 4) == 0;
    for (std::size_t len = 0; len < full.size(); ++len) {
      const std::vector<std::byte> cut(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(len));
      const FormatError e = format_error_of([&] { is_actb ? (void)decode_actb(cut) : (void)decode_wgt(cut); });
      CHECK(e.kind() == FormatErrorKind::kTruncated);
      CHECK(e.position() <= len);
    }
  }
}

TEST_CASE("bank and head conversions") {
  const ActivationBank b(Mat::from_rows({{1, 2}, {3, 4}}), std::vector<std::uint32_t>{0, 1});
  const ActivationBank back = to_bank(from_bank(b));
  CHECK(back.features() == b.features());
  CHECK(back.labels() == b.labels());
  const ActivationBank wide(Mat::from_rows({{1e300}}));
  CHECK_THROWS_AS(from_bank(wide), InvalidInput);

  const WeightHead h{Mat::from_rows({{1, 2}, {3, 4}}), Vec{5, 6}};
  const WeightHead hb = to_head(from_head(h));
  CHECK(hb.w == h.w);
  CHECK(hb.bias == h.bias);
}

TEST_CASE("files are written atomically and read back") {
  const auto dir = temp_dir();
  const ActivationBank b(Mat::from_rows({{1, 2, 3}}));
  write_actb(dir / "b.actb", b);
  CHECK(read_actb(dir / "b.actb").features() == b.features());
  const WeightHead h{Mat::from_rows({{1, 0}, {0, 1}}), std::nullopt};
  write_wgt(dir / "h.wgt", h);
  CHECK(read_wgt(dir / "h.wgt").w == h.w);
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    CHECK(entry.path().filename().string().find(".tmp") == std::string::npos);
  CHECK_THROWS_AS(read_actb(dir / "missing.actb"), InvalidInput);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run config parsing") {
  const RunConfig def;
  const std::string text = format_run_config(def);
  CHECK(text.find("k=auto\n") != std::string::npos);
  CHECK(text.find("lambda=auto\n") != std::string::npos);
  CHECK(parse_run_config(text) == def);

  const RunConfig partial = parse_run_config("# comment\n\nlambda=0.5\nbasis=si-pca\npca.d=3\nshaping.method=react\n");
  CHECK(*partial.lambda == 0.5);
  CHECK(partial.basis == BasisKind::kSiPca);
  CHECK(*partial.pca_d == 3);
  CHECK(partial.shaping_method == ShapingMethod::kReact);
  CHECK(partial.top_n == def.top_n);

  auto line_of = [](const std::string& t) {
    try {
      parse_run_config(t);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(line_of("top_n=3\nbogus=1\n").find("line 2") != std::string::npos);
  CHECK(line_of("seed=1\nseed=2\n").find("duplicate") != std::string::npos);
  CHECK(line_of("lambda=-1\n").find("line 1") != std::string::npos);
  CHECK(line_of("top_n=0\n") != "no error");
  CHECK(line_of("shaping.p=1\n") != "no error");
  CHECK(line_of("basis=qr\n") != "no error");
  CHECK(line_of("use_bias=maybe\n") != "no error");
  CHECK(line_of("novalue\n") != "no error");
}

TEST_CASE("synth spec text round trip") {
  SynthSpec s;
  s.shift_mode = ShiftMode::kMixed;
  s.shift_magnitude = 2.5;
  s.n_val = 10;
  s.seed = 99;
  CHECK(format_synth_spec(parse_synth_spec(format_synth_spec(s))) == format_synth_spec(s));
  const SynthSpec p = parse_synth_spec("n=16\nc=3\nshift_mode=decisive\n");
  CHECK(p.n == 16);
  CHECK(p.c == 3);
  CHECK(p.shift_mode == ShiftMode::kDecisive);
  CHECK_THROWS_AS(parse_synth_spec("n=16\nwhat=3\n"), ConfigError);
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(131);
  for (int t = 0; t < 200; ++t) {
    const double v = std::normal_distribution<double>(0, 1e3)(rng);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.75) == "0.75");
}
