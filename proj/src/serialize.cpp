// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#include "magnet/serialize.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <memory>

#include "magnet/errors.hpp"

namespace magnet {

static_assert(std::endian::native == std::endian::little, "parameter files assume little-endian hosts");

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw DataError("parameter file " + path.string() + " is truncated");
  }
  return value;
}

}  // namespace

void save_parameters(const ParameterSet<double>& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kParamMagic, sizeof(kParamMagic));
  put<std::uint32_t>(out, kParamVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.names()[i];
    const auto& t = params.at(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing " + path.string());
}

ParameterSet<double> load_parameters(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open parameter file " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kParamMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + " is not a parameter file");
  }
  const auto version = take<std::uint32_t>(in, path);
  if (version != kParamVersion) {
    throw DataError("unsupported parameter file version " + std::to_string(version));
  }
  const auto count = take<std::uint32_t>(in, path);
  ParameterSet<double> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = take<std::uint32_t>(in, path);
    if (len > 4096) throw DataError("parameter name too long in " + path.string());
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw DataError("parameter file " + path.string() + " is truncated");
    const auto rank = take<std::uint32_t>(in, path);
    if (rank == 0 || rank > 8) throw DataError("bad tensor rank in " + path.string());
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(take<std::uint64_t>(in, path));
    std::vector<double> data(shape_size(shape));
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw DataError("parameter file " + path.string() + " is truncated");
    }
    params.add(name, Tensor<double>(std::move(shape), std::move(data)));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("trailing bytes in parameter file " + path.string());
  }
  return params;
}

nlohmann::json parameters_to_json(const ParameterSet<double>& params) {
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = params.at(i);
    tensors.push_back({{"name", params.names()[i]},
                       {"shape", t.shape()},
                       {"data", std::vector<double>(t.data().begin(), t.data().end())}});
  }
  return {{"format", "magnet-params"}, {"version", kParamVersion}, {"tensors", std::move(tensors)}};
}

ParameterSet<double> parameters_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "magnet-params") throw DataError("not a parameter document");
    if (j.at("version").get<std::uint32_t>() != kParamVersion) throw DataError("unsupported parameter version");
    ParameterSet<double> params;
    for (const auto& t : j.at("tensors")) {
      params.add(t.at("name").get<std::string>(),
                 Tensor<double>(t.at("shape").get<Shape>(), t.at("data").get<std::vector<double>>()));
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed parameter document: ") + e.what());
  }
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest initialisation failed");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

void write_manifest(const std::filesystem::path& dir, nlohmann::json body,
                    const std::vector<std::string>& artifacts) {
  nlohmann::json sums = nlohmann::json::object();
  for (const auto& name : artifacts) {
    const auto p = dir / name;
    if (std::filesystem::exists(p)) sums[name] = sha256_file(p);
  }
  body["artifacts"] = std::move(sums);
  write_json(body, dir / "manifest.json");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace magnet
