#include "lgcn/checkpoint.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lgcn/error.hpp"

namespace lgcn {
namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::size_t parse_count(const std::string& token, const std::string& source, const char* what) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(source, 1, std::string("bad ") + what + " '" + token + "'");
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  if (ckpt.e0.rows() != ckpt.num_users + ckpt.num_items) {
    throw DimensionMismatch("checkpoint: e0 rows do not match M + N");
  }
  out << "LGCN v1 " << ckpt.num_users << ' ' << ckpt.num_items << ' ' << ckpt.dim() << ' '
      << ckpt.weights.layers() << ' '
      << (ckpt.scheme ? std::string(to_string(*ckpt.scheme)) : std::string("none")) << '\n';
  std::vector<char> bytes(ckpt.e0.size() * 8);
  std::size_t pos = 0;
  for (double v : ckpt.e0.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes[pos++] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out << "alpha";
  for (double a : ckpt.weights.alphas) out << ' ' << format_double(a);
  out << '\n';
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, ckpt);
  if (!out) throw IoError("write failure on " + path.string());
}

Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(source, 1, "missing header");
  std::istringstream hs(header);
  std::string magic, version, m, n, t, k, scheme;
  hs >> magic >> version >> m >> n >> t >> k >> scheme;
  if (magic != "LGCN" || version != "v1" || scheme.empty()) {
    throw ParseError(source, 1, "not an LGCN v1 checkpoint");
  }
  Checkpoint ckpt;
  ckpt.num_users = parse_count(m, source, "user count");
  ckpt.num_items = parse_count(n, source, "item count");
  const std::size_t dim = parse_count(t, source, "dimension");
  const std::size_t layers = parse_count(k, source, "layer count");
  if (scheme == "none") {
    ckpt.scheme = std::nullopt;
  } else if (auto s = parse_norm_scheme(scheme)) {
    ckpt.scheme = *s;
  } else {
    throw ParseError(source, 1, "unknown normalization '" + scheme + "'");
  }

  ckpt.e0 = DenseMatrix(ckpt.num_users + ckpt.num_items, dim);
  std::vector<char> bytes(ckpt.e0.size() * 8);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw ParseError(source, 1, "truncated embedding block");
  }
  std::size_t pos = 0;
  for (double& v : ckpt.e0.values()) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * b);
    }
    v = std::bit_cast<double>(bits);
  }

  std::string footer;
  if (!std::getline(in, footer)) throw ParseError(source, 2, "missing alpha footer");
  std::istringstream fs(footer);
  std::string tag;
  fs >> tag;
  if (tag != "alpha") throw ParseError(source, 2, "missing alpha footer");
  std::vector<double> alphas;
  std::string tok;
  while (fs >> tok) {
    double a = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), a);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ParseError(source, 2, "bad alpha '" + tok + "'");
    }
    alphas.push_back(a);
  }
  if (alphas.size() != layers + 1) {
    throw ParseError(source, 2, "expected " + std::to_string(layers + 1) + " alphas");
  }
  const auto uniform = LayerWeights::uniform(layers);
  const auto single = LayerWeights::single_last(layers);
  if (alphas == uniform.alphas) {
    ckpt.weights = uniform;
  } else if (alphas == single.alphas) {
    ckpt.weights = single;
  } else {
    ckpt.weights = LayerWeights::custom(std::move(alphas));
  }
  return ckpt;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in, path.string());
}

}  // namespace lgcn
