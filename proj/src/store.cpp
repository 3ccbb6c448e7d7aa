#include "actsub/store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "actsub/error.hpp"

namespace actsub::store {

namespace {

static_assert(std::endian::native == std::endian::little, "ACTB/WGT1 readers assume a little-endian host");

class Writer {
 public:
  void raw(const char* text, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) bytes_.push_back(static_cast<std::byte>(text[i]));
  }
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::byte*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  std::vector<std::byte> take() { return std::move(bytes_); }

 private:
  std::vector<std::byte> bytes_;
};

// Bounds-checked cursor: every read names the offset it failed at.
class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return bytes_.size() - offset_; }

  void expect_magic(const char* magic) {
    need(4);
    if (std::memcmp(bytes_.data(), magic, 4) != 0)
      throw FormatError(FormatErrorKind::kBadMagic, 0, std::string("expected magic ") + magic);
    offset_ += 4;
  }

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + offset_, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  // Fails at the start of the block when fewer than `count` bytes remain.
  void need(std::size_t count) const {
    if (remaining() < count) {
      throw FormatError(FormatErrorKind::kTruncated, offset_,
                        "need " + std::to_string(count) + " bytes, have " + std::to_string(remaining()));
    }
  }

  template <typename T>
  std::vector<T> get_array(std::uint64_t count) {
    const std::uint64_t bytes = count * sizeof(T);
    need(static_cast<std::size_t>(bytes));
    std::vector<T> out(static_cast<std::size_t>(count));
    if (count > 0) std::memcpy(out.data(), bytes_.data() + offset_, static_cast<std::size_t>(bytes));
    offset_ += static_cast<std::size_t>(bytes);
    return out;
  }

  void expect_end() const {
    if (remaining() != 0)
      throw FormatError(FormatErrorKind::kGarbled, offset_, std::to_string(remaining()) + " trailing bytes");
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t offset_ = 0;
};

std::uint32_t read_version(Reader& in) {
  const std::size_t at = in.offset();
  const auto version = in.get<std::uint32_t>();
  if (version != kFormatVersion)
    throw FormatError(FormatErrorKind::kBadVersion, at, "unsupported version " + std::to_string(version));
  return version;
}

bool read_flag(Reader& in) {
  const std::size_t at = in.offset();
  const auto flag = in.get<std::uint8_t>();
  if (flag > 1) throw FormatError(FormatErrorKind::kGarbled, at, "flag byte must be 0 or 1");
  return flag == 1;
}

std::uint64_t checked_count(std::uint64_t a, std::uint64_t b, std::size_t at) {
  constexpr std::uint64_t kLimit = std::numeric_limits<std::uint64_t>::max() / 8;
  if (a != 0 && b > kLimit / a) throw FormatError(FormatErrorKind::kGarbled, at, "dimensions overflow");
  return a * b;
}

void check_finite(const std::vector<float>& values, std::uint64_t base_index) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw FormatError(FormatErrorKind::kNonFinitePayload, base_index + i, "non-finite float");
  }
}

float narrow(double v) {
  const auto f = static_cast<float>(v);
  if (!std::isfinite(f)) throw InvalidInput("value " + format_double(v) + " does not fit in f32");
  return f;
}

}  // namespace

std::vector<std::byte> encode_actb(const ActbFile& file) {
  if (file.values.size() != file.rows * file.cols) throw InvalidInput("ACTB payload length != rows * cols");
  if (file.labels && file.labels->size() != file.rows) throw InvalidInput("ACTB label count != rows");
  Writer out;
  out.raw("ACTB", 4);
  out.put<std::uint32_t>(kFormatVersion);
  out.put<std::uint64_t>(file.rows);
  out.put<std::uint64_t>(file.cols);
  out.put<std::uint8_t>(file.labels ? 1 : 0);
  for (float v : file.values) out.put(v);
  if (file.labels)
    for (std::uint32_t l : *file.labels) out.put(l);
  return out.take();
}

ActbFile decode_actb(std::span<const std::byte> bytes) {
  Reader in(bytes);
  in.expect_magic("ACTB");
  read_version(in);
  ActbFile file;
  file.rows = in.get<std::uint64_t>();
  file.cols = in.get<std::uint64_t>();
  const bool has_labels = read_flag(in);
  const std::uint64_t count = checked_count(file.rows, file.cols, 8);
  file.values = in.get_array<float>(count);
  check_finite(file.values, 0);
  if (has_labels) {
    if (file.rows > std::numeric_limits<std::uint64_t>::max() / 8)
      throw FormatError(FormatErrorKind::kGarbled, 8, "row count overflows");
    file.labels = in.get_array<std::uint32_t>(file.rows);
  }
  in.expect_end();
  return file;
}

std::vector<std::byte> encode_wgt(const WgtFile& file) {
  if (file.weights.size() != file.classes * file.features) throw InvalidInput("WGT1 payload length != c * n");
  if (file.bias && file.bias->size() != file.classes) throw InvalidInput("WGT1 bias length != c");
  Writer out;
  out.raw("WGT1", 4);
  out.put<std::uint32_t>(kFormatVersion);
  out.put<std::uint64_t>(file.classes);
  out.put<std::uint64_t>(file.features);
  out.put<std::uint8_t>(file.bias ? 1 : 0);
  for (float v : file.weights) out.put(v);
  if (file.bias)
    for (float v : *file.bias) out.put(v);
  return out.take();
}

WgtFile decode_wgt(std::span<const std::byte> bytes) {
  Reader in(bytes);
  in.expect_magic("WGT1");
  read_version(in);
  WgtFile file;
  file.classes = in.get<std::uint64_t>();
  file.features = in.get<std::uint64_t>();
  const bool has_bias = read_flag(in);
  const std::uint64_t count = checked_count(file.classes, file.features, 8);
  file.weights = in.get_array<float>(count);
  check_finite(file.weights, 0);
  if (has_bias) {
    if (file.classes > std::numeric_limits<std::uint64_t>::max() / 8)
      throw FormatError(FormatErrorKind::kGarbled, 8, "class count overflows");
    file.bias = in.get_array<float>(file.classes);
    check_finite(*file.bias, count);
  }
  in.expect_end();
  return file;
}

ActivationBank to_bank(const ActbFile& file, const std::string& source) {
  linalg::Mat features(static_cast<std::size_t>(file.rows), static_cast<std::size_t>(file.cols),
                       std::vector<double>(file.values.begin(), file.values.end()));
  return ActivationBank(std::move(features), file.labels, BankMeta{source, 1.0, 0});
}

ActbFile from_bank(const ActivationBank& bank) {
  ActbFile file;
  file.rows = bank.size();
  file.cols = bank.dim();
  file.values.reserve(bank.features().data().size());
  for (double v : bank.features().data()) file.values.push_back(narrow(v));
  file.labels = bank.labels();
  return file;
}

WeightHead to_head(const WgtFile& file) {
  WeightHead head;
  head.w = linalg::Mat(static_cast<std::size_t>(file.classes), static_cast<std::size_t>(file.features),
                       std::vector<double>(file.weights.begin(), file.weights.end()));
  if (file.bias) head.bias = linalg::Vec(file.bias->begin(), file.bias->end());
  return head;
}

WgtFile from_head(const WeightHead& head) {
  WgtFile file;
  file.classes = head.classes();
  file.features = head.features();
  for (double v : head.w.data()) file.weights.push_back(narrow(v));
  if (head.bias) {
    file.bias.emplace();
    for (double v : *head.bias) file.bias->push_back(narrow(v));
  }
  return file;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<char> chars((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(chars.size());
  if (!chars.empty()) std::memcpy(out.data(), chars.data(), chars.size());
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InvalidInput("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

ActivationBank read_actb(const std::filesystem::path& path) {
  return to_bank(decode_actb(read_file(path)), path.string());
}

void write_actb(const std::filesystem::path& path, const ActivationBank& bank) {
  write_file_atomic(path, encode_actb(from_bank(bank)));
}

WeightHead read_wgt(const std::filesystem::path& path) { return to_head(decode_wgt(read_file(path))); }

void write_wgt(const std::filesystem::path& path, const WeightHead& head) {
  write_file_atomic(path, encode_wgt(from_head(head)));
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_shortest(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// key=value text

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

using Handler = std::function<void(const std::string&)>;

void parse_key_values(const std::string& text, const std::map<std::string, Handler>& handlers) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    const auto handler = handlers.find(key);
    if (handler == handlers.end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (const auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "' (first on line " +
                        std::to_string(it->second) + ")");
    }
    try {
      handler->second(value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + key + ": " + e.what());
    }
  }
}

double parse_double(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("'" + v + "' is not a finite number");
  return out;
}

std::uint64_t parse_uint(const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("'" + v + "' is not a non-negative integer");
  return out;
}

double parse_fraction(const std::string& v, bool allow_zero, bool allow_one) {
  const double x = parse_double(v);
  if (x < 0.0 || x > 1.0 || (!allow_zero && x == 0.0) || (!allow_one && x == 1.0))
    throw ConfigError("'" + v + "' outside the allowed fraction range");
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("'" + v + "' is not a boolean");
}

template <typename T, typename F>
std::optional<T> parse_auto(const std::string& v, F&& parse) {
  if (v == "auto") return std::nullopt;
  return parse(v);
}

template <typename T, typename F>
std::string format_auto(const std::optional<T>& v, F&& format) {
  return v ? format(*v) : std::string("auto");
}

std::string format_uint(std::uint64_t v) { return std::to_string(v); }

}  // namespace

std::string format_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "method=" << cfg.method << '\n';
  out << "k=" << format_auto(cfg.k, format_uint) << '\n';
  out << "lambda=" << format_auto(cfg.lambda, format_shortest) << '\n';
  out << "top_n=" << cfg.top_n << '\n';
  out << "shaping.method=" << to_string(cfg.shaping_method) << '\n';
  out << "shaping.p=" << format_auto(cfg.shaping_p, format_shortest) << '\n';
  out << "shaping.clamp_percentile=" << format_shortest(cfg.clamp_percentile) << '\n';
  out << "shaping.clamp_value=" << format_auto(cfg.clamp_value, format_shortest) << '\n';
  out << "sample_fraction=" << format_shortest(cfg.sample_fraction) << '\n';
  out << "prototype_fraction=" << format_shortest(cfg.prototype_fraction) << '\n';
  out << "seed=" << cfg.seed << '\n';
  out << "basis=" << to_string(cfg.basis) << '\n';
  out << "pca.d=" << format_auto(cfg.pca_d, format_uint) << '\n';
  out << "use_bias=" << (cfg.use_bias ? "true" : "false") << '\n';
  out << "s_arrow.component=" << to_string(cfg.s_arrow_component) << '\n';
  return out.str();
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  const std::map<std::string, Handler> handlers{
      {"method",
       [&](const std::string& v) {
         if (v != "actsub" && v != "energy" && v != "msp" && v != "decisive" && v != "insignificant")
           throw ConfigError("unknown method '" + v + "'");
         cfg.method = v;
       }},
      {"k", [&](const std::string& v) { cfg.k = parse_auto<std::size_t>(v, parse_uint); }},
      {"lambda",
       [&](const std::string& v) {
         cfg.lambda = parse_auto<double>(v, [](const std::string& s) {
           const double x = parse_double(s);
           if (x < 0.0) throw ConfigError("lambda must be >= 0");
           return x;
         });
       }},
      {"top_n",
       [&](const std::string& v) {
         cfg.top_n = parse_uint(v);
         if (cfg.top_n == 0) throw ConfigError("top_n must be >= 1");
       }},
      {"shaping.method", [&](const std::string& v) { cfg.shaping_method = parse_shaping_method(v); }},
      {"shaping.p",
       [&](const std::string& v) {
         cfg.shaping_p = parse_auto<double>(v, [](const std::string& s) { return parse_fraction(s, true, false); });
       }},
      {"shaping.clamp_percentile",
       [&](const std::string& v) { cfg.clamp_percentile = parse_fraction(v, false, true); }},
      {"shaping.clamp_value", [&](const std::string& v) { cfg.clamp_value = parse_auto<double>(v, parse_double); }},
      {"sample_fraction", [&](const std::string& v) { cfg.sample_fraction = parse_fraction(v, false, true); }},
      {"prototype_fraction", [&](const std::string& v) { cfg.prototype_fraction = parse_fraction(v, true, true); }},
      {"seed", [&](const std::string& v) { cfg.seed = parse_uint(v); }},
      {"basis", [&](const std::string& v) { cfg.basis = parse_basis_kind(v); }},
      {"pca.d", [&](const std::string& v) { cfg.pca_d = parse_auto<std::size_t>(v, parse_uint); }},
      {"use_bias", [&](const std::string& v) { cfg.use_bias = parse_bool(v); }},
      {"s_arrow.component", [&](const std::string& v) { cfg.s_arrow_component = parse_component(v); }},
  };
  parse_key_values(text, handlers);
  return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) { return parse_run_config(read_text(path)); }

void write_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  write_text_atomic(path, format_run_config(cfg));
}

std::string format_synth_spec(const SynthSpec& spec) {
  std::ostringstream out;
  out << "n=" << spec.n << '\n';
  out << "c=" << spec.c << '\n';
  out << "n_train=" << spec.n_train << '\n';
  out << "n_id_test=" << spec.n_id_test << '\n';
  out << "n_ood_test=" << spec.n_ood_test << '\n';
  out << "n_val=" << spec.n_val << '\n';
  out << "shift_mode=" << to_string(spec.shift_mode) << '\n';
  out << "shift_magnitude=" << format_shortest(spec.shift_magnitude) << '\n';
  out << "nuisance_dim=" << spec.nuisance_dim << '\n';
  out << "seed=" << spec.seed << '\n';
  out << "class_separation=" << format_shortest(spec.class_separation) << '\n';
  out << "base_level=" << format_shortest(spec.base_level) << '\n';
  out << "noise_std=" << format_shortest(spec.noise_std) << '\n';
  out << "nuisance_std=" << format_shortest(spec.nuisance_std) << '\n';
  out << "train_epochs=" << spec.train_epochs << '\n';
  out << "learning_rate=" << format_shortest(spec.learning_rate) << '\n';
  out << "init_std=" << format_shortest(spec.init_std) << '\n';
  return out.str();
}

SynthSpec parse_synth_spec(const std::string& text) {
  SynthSpec spec;
  auto count = [](std::size_t& field) { return [&field](const std::string& v) { field = parse_uint(v); }; };
  auto real = [](double& field) { return [&field](const std::string& v) { field = parse_double(v); }; };
  const std::map<std::string, Handler> handlers{
      {"n", count(spec.n)},
      {"c", count(spec.c)},
      {"n_train", count(spec.n_train)},
      {"n_id_test", count(spec.n_id_test)},
      {"n_ood_test", count(spec.n_ood_test)},
      {"n_val", count(spec.n_val)},
      {"shift_mode", [&](const std::string& v) { spec.shift_mode = parse_shift_mode(v); }},
      {"shift_magnitude", real(spec.shift_magnitude)},
      {"nuisance_dim", count(spec.nuisance_dim)},
      {"seed", [&](const std::string& v) { spec.seed = parse_uint(v); }},
      {"class_separation", real(spec.class_separation)},
      {"base_level", real(spec.base_level)},
      {"noise_std", real(spec.noise_std)},
      {"nuisance_std", real(spec.nuisance_std)},
      {"train_epochs", count(spec.train_epochs)},
      {"learning_rate", real(spec.learning_rate)},
      {"init_std", real(spec.init_std)},
  };
  parse_key_values(text, handlers);
  return spec;
}

SynthSpec read_synth_spec(const std::filesystem::path& path) { return parse_synth_spec(read_text(path)); }

}  // namespace actsub::store
