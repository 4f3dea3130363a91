#include "charsoft/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>

#include "charsoft/error.hpp"
#include "charsoft/hashing.hpp"
#include "charsoft/textio.hpp"

namespace charsoft {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return trim_right(s);
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw SchemaError("config key '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  if (!parse_double(v, out) || !std::isfinite(out)) {
    throw SchemaError("config key '" + std::string(key) + "': expected a finite number, got '" +
                      std::string(v) + "'");
  }
  return out;
}

bool parse_flag(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw SchemaError("config key '" + std::string(key) + "': expected 0/1, got '" + std::string(v) + "'");
}

std::vector<std::pair<char, char>> parse_pairs(std::string_view key, std::string_view v) {
  std::vector<std::pair<char, char>> out;
  if (v.empty()) return out;
  for (auto tok : split(v, ',')) {
    if (tok.size() != 2) {
      throw SchemaError("config key '" + std::string(key) + "': pairs are two characters each, got '" +
                        std::string(tok) + "'");
    }
    out.emplace_back(tok[0], tok[1]);
  }
  return out;
}

std::string format_pairs(const std::vector<std::pair<char, char>>& pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) {
    if (!out.empty()) out += ',';
    out += a;
    out += b;
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool is_path = false;
};

std::filesystem::path resolve(std::string_view v, const std::filesystem::path& base) {
  if (v.empty()) return {};
  std::filesystem::path p{std::string(v)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

#define CS_U64(KEY, MEMBER)                                                                  \
  Field {                                                                                    \
    KEY, [](RunConfig& c, std::string_view v, const auto&) { c.MEMBER = parse_u64(KEY, v); }, \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }                          \
  }
#define CS_REAL(KEY, MEMBER)                                                                  \
  Field {                                                                                     \
    KEY, [](RunConfig& c, std::string_view v, const auto&) { c.MEMBER = parse_real(KEY, v); }, \
        [](const RunConfig& c) { return format_scalar(c.MEMBER); }                            \
  }
#define CS_FLAG(KEY, MEMBER)                                                                  \
  Field {                                                                                     \
    KEY, [](RunConfig& c, std::string_view v, const auto&) { c.MEMBER = parse_flag(KEY, v); }, \
        [](const RunConfig& c) { return std::string(c.MEMBER ? "1" : "0"); }                  \
  }
#define CS_PATH(KEY, MEMBER)                                                                   \
  Field {                                                                                      \
    KEY, [](RunConfig& c, std::string_view v, const auto& base) { c.MEMBER = resolve(v, base); }, \
        [](const RunConfig& c) { return c.MEMBER.string(); }, true                             \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      Field{"vocab.chars", [](RunConfig& c, std::string_view v, const auto&) { c.chars = std::string(v); },
            [](const RunConfig& c) { return c.chars; }},
      Field{"vocab.case",
            [](RunConfig& c, std::string_view v, const auto&) { c.case_policy = parse_case_policy(v); },
            [](const RunConfig& c) { return std::string(to_string(c.case_policy)); }},
      CS_PATH("corpus.train", train_words),
      CS_PATH("corpus.generic", generic_words),
      CS_PATH("corpus.exclude", exclude_words),
      CS_U64("corpus.n_generic", n_generic),
      CS_U64("corpus.seed", corpus_seed),
      CS_U64("corpus.demo_words", demo_words),
      CS_U64("corpus.demo_generic", demo_generic),
      CS_U64("embed.dim", embed.dim),
      CS_U64("embed.radius", embed.context_radius),
      CS_REAL("embed.noise", embed.noise_scale),
      CS_U64("embed.seed", embed.seed),
      CS_REAL("softlabel.threshold", softlabel.threshold),
      CS_REAL("softlabel.temperature", softlabel.temperature),
      CS_FLAG("softlabel.normalize", softlabel.normalize),
      CS_U64("glyph.dim", glyph_dim),
      CS_REAL("glyph.noise", glyph_noise),
      CS_REAL("glyph.delta", glyph_delta),
      Field{"glyph.pairs",
            [](RunConfig& c, std::string_view v, const auto&) { c.ambiguity_pairs = parse_pairs("glyph.pairs", v); },
            [](const RunConfig& c) { return format_pairs(c.ambiguity_pairs); }},
      CS_U64("glyph.seed", glyph_seed),
      CS_U64("data.samples_per_word", samples_per_word),
      CS_U64("data.seed", data_seed),
      CS_U64("train.epochs", train.epochs),
      CS_U64("train.batch", train.batch_size),
      CS_REAL("train.lr", train.learning_rate),
      CS_U64("train.hidden", train.hidden),
      CS_FLAG("train.teacher_forcing", train.teacher_forcing),
      CS_U64("train.seed", train.seed),
      CS_REAL("train.beta1", train.beta1),
      CS_REAL("train.beta2", train.beta2),
      CS_REAL("train.epsilon", train.epsilon),
  };
  return kFields;
}

#undef CS_U64
#undef CS_REAL
#undef CS_FLAG
#undef CS_PATH

}  // namespace

void RunConfig::validate() const {
  (void)vocab();
  (void)SoftLabelSet(vocab(), softlabel);
  if (embed.dim < 2) throw PreconditionError("embed.dim must be >= 2");
  if (!(embed.noise_scale >= 0.0)) throw PreconditionError("embed.noise must be >= 0");
  if (glyph_dim < 2) throw PreconditionError("glyph.dim must be >= 2");
  if (!(glyph_noise >= 0.0)) throw PreconditionError("glyph.noise must be >= 0");
  if (!(glyph_delta > 0.0 && glyph_delta <= 2.0)) throw PreconditionError("glyph.delta must lie in (0, 2]");
  const CharVocab v = vocab();
  for (const auto& [a, b] : ambiguity_pairs) {
    if (!v.index_of(a) || !v.index_of(b) || v.fold(a) == v.fold(b)) {
      throw PreconditionError(std::string("glyph.pairs entry '") + a + b + "' is invalid for this vocabulary");
    }
  }
  if (samples_per_word == 0) throw PreconditionError("data.samples_per_word must be positive");
  if (train.batch_size == 0) throw PreconditionError("train.batch must be positive");
  if (train.hidden == 0) throw PreconditionError("train.hidden must be positive");
  if (!(train.learning_rate >= 0.0)) throw PreconditionError("train.lr must be >= 0");
  if (!(train.beta1 >= 0.0 && train.beta1 < 1.0 && train.beta2 >= 0.0 && train.beta2 < 1.0)) {
    throw PreconditionError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (!(train.epsilon > 0.0)) throw PreconditionError("train.epsilon must be positive");
  if (train_words.empty() && demo_words == 0) throw PreconditionError("corpus.demo_words must be positive");
  if (generic_words.empty() && n_generic > demo_generic) {
    throw PreconditionError("corpus.n_generic exceeds corpus.demo_generic");
  }
  for (const auto* p : {&train_words, &generic_words, &exclude_words}) {
    if (!p->empty() && !std::filesystem::is_regular_file(*p)) {
      throw PreconditionError("missing input file " + p->string());
    }
  }
}

CharVocab RunConfig::vocab() const { return build_vocab(chars, case_policy); }

GlyphBankParams RunConfig::glyph_params() const {
  return GlyphBankParams{glyph_dim, glyph_noise, glyph_delta, ambiguity_pairs, glyph_seed};
}

RunConfig RunConfig::with_seed_offset(std::uint64_t offset) const {
  RunConfig c = *this;
  c.corpus_seed += offset;
  c.embed.seed += offset;
  c.glyph_seed += offset;
  c.data_seed += offset;
  c.train.seed += offset;
  return c;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig config;
  std::vector<std::string> seen;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    // A '#' after whitespace starts a trailing comment; a bare '#' may be a value character.
    for (std::size_t i = 1; i < line.size(); ++i) {
      if (line[i] == '#' && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line = trim(line.substr(0, i));
        break;
      }
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& fs = fields();
    auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return key == f.key; });
    if (it == fs.end()) {
      throw SchemaError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw SchemaError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    seen.push_back(key);
    try {
      it->set(config, value, base_dir);
    } catch (const SchemaError&) {
      throw;
    } catch (const Error& e) {
      throw SchemaError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(config) + '\n';
  return out;
}

std::uint64_t config_hash(const RunConfig& config) {
  Fnv1a h;
  h.update("runconfig/v1\n");
  for (const auto& f : fields()) {
    std::string value = f.get(config);
    if (f.is_path && !value.empty()) value = "file:" + to_hex64(hash_file(value));
    h.update(f.key).update("=").update(value).update("\n");
  }
  return h.digest();
}

}  // namespace charsoft
