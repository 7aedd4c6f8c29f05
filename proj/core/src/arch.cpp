#include "ladder/arch.hpp"

#include "ladder/errors.hpp"

namespace ladder {

std::string ArchSpec::label() const {
  switch (kind) {
    case Kind::Standard: return "standard";
    case Kind::Ladder: return "ladder";
    case Kind::Parallel: return "parallel";
    case Kind::UpperBound: return "upper-bound";
    case Kind::Hybrid: return "hybrid:" + std::to_string(hybrid_k);
  }
  return "?";
}

ModelConfig ArchSpec::configure(const ModelConfig& base) const {
  switch (kind) {
    case Kind::Standard:
    case Kind::UpperBound:
      return base.with_uniform_variant(LayerVariant::Standard);
    case Kind::Ladder:
      return base.with_uniform_variant(LayerVariant::Ladder);
    case Kind::Parallel:
      return base.with_uniform_variant(LayerVariant::ParallelAttnMlp);
    case Kind::Hybrid:
      return base.with_ladder_suffix(hybrid_k);
  }
  throw ConfigError("bad arch kind");
}

ArchSpec arch_from_string(const std::string& s) {
  ArchSpec a;
  if (s == "standard") {
    a.kind = ArchSpec::Kind::Standard;
  } else if (s == "ladder") {
    a.kind = ArchSpec::Kind::Ladder;
  } else if (s == "parallel") {
    a.kind = ArchSpec::Kind::Parallel;
  } else if (s == "upper-bound") {
    a.kind = ArchSpec::Kind::UpperBound;
  } else if (s.rfind("hybrid:", 0) == 0) {
    a.kind = ArchSpec::Kind::Hybrid;
    try {
      a.hybrid_k = std::stoi(s.substr(7));
    } catch (const std::exception&) {
      throw ConfigError("bad hybrid arch '" + s + "', expected hybrid:<k>");
    }
    if (a.hybrid_k < 0) throw ConfigError("hybrid:k requires k >= 0");
  } else {
    throw ConfigError("unknown arch '" + s +
                      "' (want standard|ladder|parallel|upper-bound|hybrid:<k>)");
  }
  return a;
}

std::vector<ArchSpec> parse_arch_list(const std::string& comma_separated) {
  std::vector<ArchSpec> out;
  size_t pos = 0;
  while (pos <= comma_separated.size()) {
    size_t next = comma_separated.find(',', pos);
    if (next == std::string::npos) next = comma_separated.size();
    std::string tok = comma_separated.substr(pos, next - pos);
    if (!tok.empty()) out.push_back(arch_from_string(tok));
    pos = next + 1;
  }
  if (out.empty()) throw ConfigError("empty arch list");
  return out;
}

}  // namespace ladder
