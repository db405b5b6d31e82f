// SPDX-License-Identifier: Apache-2.0
#include "lineocr/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <system_error>

#include "lineocr/utf8.hpp"

namespace lineocr {

namespace {

using json = nlohmann::json;
using Kind = ModelFormatError::Kind;

constexpr std::string_view kMagic = "LINEOCR-MODEL ";

void append_le(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float read_le(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

std::string tensor_name(const LayerParams<float>& p, const std::string& role) { return p.name + "." + role; }

}  // namespace

std::string serialize_model(const Model& model) {
  json header;
  header["spec"] = render_spec(model.spec);
  json codec = json::array();
  for (char32_t c : model.codec.chars()) codec.push_back(utf8::encode(c));
  header["codec"] = std::move(codec);
  header["line_height"] = model.network.input_height();
  header["hyper"] = model.hyper;

  std::string body;
  json index = json::array();
  for (const auto& p : model.network.params()) {
    for (const auto& [role, w] : p.weights) {
      index.push_back({{"name", tensor_name(p, role)},
                       {"dtype", "f32"},
                       {"shape", w.shape()},
                       {"offset", body.size()},
                       {"length", w.size() * 4}});
      for (float v : w.data()) append_le(body, v);
    }
  }
  header["tensors"] = std::move(index);

  const std::string head = header.dump();
  std::string out = std::string(kMagic) + std::to_string(kModelFormatVersion) + "\n" + std::to_string(head.size()) + "\n";
  out += head;
  out += "\n";
  out += body;
  return out;
}

Model deserialize_model(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw ModelFormatError(Kind::NotAModel, "not a model file");
  std::size_t pos = kMagic.size();
  auto read_line = [&]() -> std::string_view {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw ModelFormatError(Kind::Truncated, "truncated header");
    const auto line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  const std::string version(read_line());
  if (version != std::to_string(kModelFormatVersion)) {
    throw ModelFormatError(Kind::VersionMismatch, "model format version " + version + " is not supported (expected " +
                                                      std::to_string(kModelFormatVersion) + ")");
  }
  std::size_t header_len = 0;
  try {
    header_len = std::stoul(std::string(read_line()));
  } catch (const std::exception&) {
    throw ModelFormatError(Kind::BadHeader, "malformed header length");
  }
  if (bytes.size() < pos + header_len + 1) throw ModelFormatError(Kind::Truncated, "truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw ModelFormatError(Kind::BadHeader, std::string("malformed header: ") + e.what());
  }
  pos += header_len;
  if (bytes[pos] != '\n') throw ModelFormatError(Kind::BadHeader, "missing header terminator");
  const std::string_view body = bytes.substr(pos + 1);

  try {
    Model model;
    model.spec = parse_spec(header.at("spec").get<std::string>());
    std::u32string chars;
    for (const auto& c : header.at("codec")) {
      const std::u32string one = utf8::decode(c.get<std::string>());
      if (one.size() != 1) throw ModelFormatError(Kind::BadHeader, "codec entries must be single characters");
      chars.push_back(one[0]);
    }
    model.codec = Codec(std::move(chars));
    model.hyper = header.at("hyper").get<std::map<std::string, double>>();
    const auto line_height = header.at("line_height").get<std::size_t>();

    // A freshly initialized network provides the authoritative set of names and shapes.
    Network<float> reference(model.spec, line_height, model.codec.size(), 0);
    std::vector<LayerParams<float>> params = reference.params();
    std::map<std::string, Tensor<float>*> slots;
    for (auto& p : params) {
      for (auto& [role, w] : p.weights) slots.emplace(tensor_name(p, role), &w);
    }

    std::set<std::string> seen;
    std::size_t expected_offset = 0;
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      auto slot = slots.find(name);
      if (slot == slots.end()) throw ModelFormatError(Kind::UnknownTensor, "unknown tensor '" + name + "'");
      if (!seen.insert(name).second) throw ModelFormatError(Kind::BadHeader, "duplicate tensor '" + name + "'");
      if (entry.at("dtype").get<std::string>() != "f32") throw ModelFormatError(Kind::BadHeader, "unsupported dtype");
      const auto shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto length = entry.at("length").get<std::size_t>();
      Tensor<float>& w = *slot->second;
      if (shape != w.shape() || length != w.size() * 4) {
        throw ModelFormatError(Kind::BadHeader, "tensor '" + name + "' has shape " + shape_string(shape) +
                                                    ", spec implies " + shape_string(w.shape()));
      }
      if (offset != expected_offset) throw ModelFormatError(Kind::BadHeader, "tensor offsets out of order");
      if (body.size() < offset + length) throw ModelFormatError(Kind::Truncated, "truncated body");
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = read_le(body.data() + offset + 4 * i);
      expected_offset = offset + length;
    }
    for (const auto& [name, slot] : slots) {
      if (!seen.count(name)) throw ModelFormatError(Kind::MissingTensor, "missing tensor '" + name + "'");
    }
    if (body.size() != expected_offset) throw ModelFormatError(Kind::BadHeader, "trailing bytes after body");
    for (auto& p : params) p.zero_grad();
    model.network = Network<float>::from_params(model.spec, line_height, model.codec.size(), std::move(params));
    return model;
  } catch (const json::exception& e) {
    throw ModelFormatError(Kind::BadHeader, std::string("malformed header: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelFormatError(Kind::Io, "cannot write model to " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw ModelFormatError(Kind::Io, "cannot write model to " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ModelFormatError(Kind::Io, "cannot move model into place at " + path.string());
  }
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError(Kind::Io, "cannot read model " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace lineocr
