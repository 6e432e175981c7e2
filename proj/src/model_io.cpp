#include "resonance_lab/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "resonance_lab/error.hpp"

namespace resonance_lab {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& what, Errc code = Errc::parse_error) const {
    std::ostringstream msg;
    msg << source_;
    if (at.IsDefined() && at.Mark().line >= 0) msg << ":" << at.Mark().line + 1 << ":" << at.Mark().column + 1;
    msg << ": " << what;
    throw Error("model", code, msg.str());
  }

  void only_keys(const YAML::Node& map, std::initializer_list<std::string_view> allowed) const {
    if (!map.IsMap()) fail(map, "expected a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (auto a : allowed) ok = ok || key == a;
      if (!ok) fail(kv.first, "unknown key '" + key + "'");
    }
  }

  Expr expr(const YAML::Node& node) const {
    if (!node.IsScalar()) fail(node, "expected a number or expression");
    try {
      return Expr::parse(node.Scalar());
    } catch (const Error& e) {
      fail(node, e.detail());
    }
  }

  std::size_t index(const YAML::Node& node) const {
    if (!node.IsScalar()) fail(node, "expected a non-negative integer");
    const auto& s = node.Scalar();
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(node, "expected a non-negative integer, got '" + s + "'");
    return v;
  }

  double number(const YAML::Node& node) const {
    const Expr e = expr(node);
    if (!e.is_constant()) fail(node, "parameter defaults must be constants");
    return e.evaluate({});
  }

 private:
  std::string source_;
};

ModelSpec read_spec(const YAML::Node& root, const Reader& rd) {
  rd.only_keys(root, {"levels", "params", "hb", "channels"});
  ModelSpec spec;

  const YAML::Node levels = root["levels"];
  if (!levels) rd.fail(root, "missing required key 'levels'");
  spec.levels = rd.index(levels);
  if (spec.levels == 0) rd.fail(levels, "levels must be >= 1", Errc::invalid_input);
  const std::size_t n = spec.levels;

  if (const YAML::Node params = root["params"]) {
    if (!params.IsMap()) rd.fail(params, "params must be a mapping of name: value");
    for (const auto& kv : params) spec.params[kv.first.as<std::string>()] = rd.number(kv.second);
  }

  auto check_params = [&](const YAML::Node& at, const Expr& e) {
    for (const auto& p : e.parameters())
      if (!spec.params.contains(p)) rd.fail(at, "undeclared parameter '$" + p + "'", Errc::invalid_input);
  };

  const YAML::Node hb = root["hb"];
  if (!hb) rd.fail(root, "missing required key 'hb'");
  rd.only_keys(hb, {"diagonal", "entries", "dense"});
  if (hb["dense"] && (hb["diagonal"] || hb["entries"])) rd.fail(hb, "'dense' cannot be combined with 'diagonal' or 'entries'");

  if (const YAML::Node dense = hb["dense"]) {
    if (!dense.IsSequence() || dense.size() != n) rd.fail(dense, "dense H_B must have " + std::to_string(n) + " rows");
    for (std::size_t i = 0; i < n; ++i)
      if (!dense[i].IsSequence() || dense[i].size() != n)
        rd.fail(dense[i], "dense H_B row must have " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const Expr upper = rd.expr(dense[i][j]);
        check_params(dense[i][j], upper);
        if (j > i) {
          const Expr lower = rd.expr(dense[j][i]);
          const bool same_text = upper.source() == lower.source();
          const bool same_value = upper.is_constant() && lower.is_constant() &&
                                  upper.evaluate({}) == lower.evaluate({});
          if (!same_text && !same_value) rd.fail(dense[j][i], "dense H_B is not symmetric", Errc::invalid_input);
          if (upper.is_constant() && upper.evaluate({}) == 0.0) continue;
        }
        spec.hb.push_back({i, j, upper});
      }
  }
  if (const YAML::Node diag = hb["diagonal"]) {
    if (!diag.IsSequence() || diag.size() != n) rd.fail(diag, "diagonal must have " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < n; ++i) {
      const Expr e = rd.expr(diag[i]);
      check_params(diag[i], e);
      spec.hb.push_back({i, i, e});
    }
  }
  if (const YAML::Node entries = hb["entries"]) {
    if (!entries.IsSequence()) rd.fail(entries, "entries must be a list of [row, col, value]");
    for (const auto& t : entries) {
      if (!t.IsSequence() || t.size() != 3) rd.fail(t, "entry must be [row, col, value]");
      const std::size_t r = rd.index(t[0]), c = rd.index(t[1]);
      if (r >= n || c >= n) rd.fail(t, "entry index out of range", Errc::invalid_input);
      const Expr e = rd.expr(t[2]);
      check_params(t[2], e);
      for (const auto& prev : spec.hb)
        if (std::min(prev.row, prev.col) == std::min(r, c) && std::max(prev.row, prev.col) == std::max(r, c))
          rd.fail(t, "duplicate H_B entry", Errc::invalid_input);
      spec.hb.push_back({r, c, e});
    }
  }

  const YAML::Node channels = root["channels"];
  if (!channels) rd.fail(root, "missing required key 'channels'");
  if (!channels.IsSequence() || channels.size() == 0) rd.fail(channels, "channels must be a non-empty list");
  for (const auto& ch : channels) {
    rd.only_keys(ch, {"kind", "threshold", "band_top", "dos_scale", "hopping", "coupling"});
    ChannelSpec cs;
    const YAML::Node kind = ch["kind"];
    if (!kind) rd.fail(ch, "channel needs 'kind'");
    const auto k = kind.as<std::string>();
    auto field = [&](const char* key) {
      const YAML::Node node = ch[key];
      if (!node) rd.fail(ch, std::string(k) + " channel needs '" + key + "'");
      Expr e = rd.expr(node);
      check_params(node, e);
      return e;
    };
    auto forbid = [&](std::initializer_list<const char*> keys) {
      for (const char* key : keys)
        if (ch[key]) rd.fail(ch[key], std::string("'") + key + "' is not used by " + k + " channels");
    };
    if (k == "wideband") {
      cs.kind = ChannelKind::wideband;
      forbid({"threshold", "band_top", "hopping"});
      cs.dos_scale = field("dos_scale");
    } else if (k == "flatband") {
      cs.kind = ChannelKind::flatband;
      forbid({"hopping"});
      cs.threshold = field("threshold");
      cs.band_top = field("band_top");
      cs.dos_scale = field("dos_scale");
    } else if (k == "chain_lead") {
      cs.kind = ChannelKind::chain_lead;
      forbid({"band_top", "dos_scale"});
      cs.threshold = field("threshold");
      cs.dos_scale = field("hopping");
    } else {
      rd.fail(kind, "unknown channel kind '" + k + "' (wideband, flatband, chain_lead)");
    }
    const YAML::Node coupling = ch["coupling"];
    if (!coupling) rd.fail(ch, "channel needs 'coupling'");
    if (!coupling.IsSequence() || coupling.size() != n)
      rd.fail(coupling, "coupling must have " + std::to_string(n) + " entries", Errc::invalid_input);
    for (const auto& g : coupling) {
      Expr e = rd.expr(g);
      check_params(g, e);
      cs.coupling.push_back(std::move(e));
    }
    spec.channels.push_back(std::move(cs));
  }
  return spec;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

SystemModel parse_model(std::string_view text, const std::string& source_name) {
  const Reader rd(source_name);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    std::ostringstream msg;
    msg << source_name << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": " << e.msg;
    throw Error("model", Errc::parse_error, msg.str());
  }
  if (!root.IsMap()) rd.fail(root, "model file must be a mapping");
  ModelSpec spec;
  try {
    spec = read_spec(root, rd);
  } catch (const YAML::Exception& e) {
    std::ostringstream msg;
    msg << source_name << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": " << e.msg;
    throw Error("model", Errc::parse_error, msg.str());
  }
  try {
    return SystemModel(std::move(spec));
  } catch (const Error& e) {
    throw Error("model", e.code(), source_name + ": " + e.detail());
  }
}

SystemModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("model", Errc::invalid_input, "cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str(), path);
}

std::string dump_model(const SystemModel& model) {
  std::ostringstream out;
  const auto n = static_cast<Eigen::Index>(model.levels());
  out << "levels: " << n << "\n";
  out << "hb:\n  dense:\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << "    - [";
    for (Eigen::Index j = 0; j < n; ++j) out << (j ? ", " : "") << fmt(model.hb()(i, j));
    out << "]\n";
  }
  out << "channels:\n";
  for (std::size_t c = 0; c < model.channel_count(); ++c) {
    const Channel& ch = model.channels()[c];
    out << "  - kind: " << to_string(ch.kind) << "\n";
    switch (ch.kind) {
      case ChannelKind::wideband:
        out << "    dos_scale: " << fmt(ch.dos_scale) << "\n";
        break;
      case ChannelKind::flatband:
        out << "    threshold: " << fmt(ch.threshold) << "\n    band_top: " << fmt(ch.band_top)
            << "\n    dos_scale: " << fmt(ch.dos_scale) << "\n";
        break;
      case ChannelKind::chain_lead:
        out << "    threshold: " << fmt(ch.threshold) << "\n    hopping: " << fmt(ch.hopping()) << "\n";
        break;
    }
    out << "    coupling: [";
    for (Eigen::Index i = 0; i < n; ++i)
      out << (i ? ", " : "") << fmt(model.couplings()(i, static_cast<Eigen::Index>(c)));
    out << "]\n";
  }
  return out.str();
}

}  // namespace resonance_lab
