#include "castelet/frame_io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace castelet {

namespace {

nlohmann::json ring_json(const std::vector<Vec2>& ring) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : ring) a.push_back({p.x(), p.y()});
  return a;
}

std::vector<Vec2> ring_from(const nlohmann::json& a) {
  std::vector<Vec2> r;
  for (const auto& p : a) r.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  return r;
}

}  // namespace

nlohmann::json frame_to_json(const RenderFrame& frame) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : frame.layers) {
    nlohmann::json j;
    j["kind"] = l.kind == Layer::Kind::silhouette ? "silhouette" : "shadow";
    j["oav"] = l.oav;
    if (l.kind == Layer::Kind::shadow) {
      j["light"] = l.light;
      j["screen"] = l.screen;
    }
    j["polygon"] = ring_json(l.polygon);
    nlohmann::json holes = nlohmann::json::array();
    for (const auto& h : l.holes) holes.push_back(ring_json(h));
    j["holes"] = std::move(holes);
    j["color"] = {l.color.r, l.color.g, l.color.b, l.color.a};
    j["depth"] = l.depth;
    layers.push_back(std::move(j));
  }
  return {{"tick", frame.tick}, {"time", frame.time}, {"layers", std::move(layers)}};
}

RenderFrame frame_from_json(const nlohmann::json& j) {
  RenderFrame f;
  f.tick = j.at("tick").get<std::uint64_t>();
  f.time = j.at("time").get<double>();
  for (const auto& lj : j.at("layers")) {
    Layer l;
    l.kind = lj.at("kind").get<std::string>() == "shadow" ? Layer::Kind::shadow : Layer::Kind::silhouette;
    l.oav = lj.at("oav").get<std::string>();
    if (l.kind == Layer::Kind::shadow) {
      l.light = lj.at("light").get<std::string>();
      l.screen = lj.at("screen").get<std::string>();
    }
    l.polygon = ring_from(lj.at("polygon"));
    for (const auto& h : lj.value("holes", nlohmann::json::array())) l.holes.push_back(ring_from(h));
    const auto& c = lj.at("color");
    l.color = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>(), c.at(3).get<double>()};
    l.depth = lj.at("depth").get<double>();
    f.layers.push_back(std::move(l));
  }
  return f;
}

std::string serialize_frame(const RenderFrame& frame) { return frame_to_json(frame).dump(); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string frame_hash(const RenderFrame& frame) { return sha256_hex(serialize_frame(frame)); }

std::string frame_to_svg(const RenderFrame& frame, double width, double height) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#f4ecd8\"/>\n";
  auto path = [&](const std::vector<Vec2>& ring) {
    for (std::size_t i = 0; i < ring.size(); ++i)
      os << (i == 0 ? 'M' : 'L') << ring[i].x() << ',' << ring[i].y() << ' ';
    if (!ring.empty()) os << "Z ";
  };
  for (const auto& l : frame.layers) {
    const bool shadow = l.kind == Layer::Kind::shadow;
    os << "<g class=\"" << (shadow ? "shadow" : "silhouette") << "\" data-oav=\"" << l.oav << '"';
    if (shadow) os << " data-light=\"" << l.light << "\" data-screen=\"" << l.screen << '"';
    char color[8];
    auto channel = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    std::snprintf(color, sizeof color, "#%02x%02x%02x", channel(l.color.r), channel(l.color.g), channel(l.color.b));
    os << ">\n<path fill=\"" << color << "\" fill-opacity=\"" << l.color.a << "\" fill-rule=\"evenodd\" d=\"";
    path(l.polygon);
    for (const auto& h : l.holes) path(h);
    os << "\"/>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace castelet
