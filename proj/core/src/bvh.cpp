#include "castelet/bvh.hpp"

#include "castelet/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace castelet {

namespace {

struct Token {
  std::string_view text;
  std::size_t line = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) {
    std::size_t line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (c == '\n') {
        ++line;
        ++i;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
      } else if (c == '{' || c == '}') {
        tokens_.push_back({text.substr(i, 1), line});
        ++i;
      } else {
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
               text[j] != '{' && text[j] != '}')
          ++j;
        tokens_.push_back({text.substr(i, j - i), line});
        i = j;
      }
    }
    last_line_ = line;
  }

  bool done() const { return pos_ >= tokens_.size(); }
  const Token& peek() const {
    if (done()) throw ParseError(last_line_, "unexpected end of input");
    return tokens_[pos_];
  }
  Token next() {
    const Token& t = peek();
    ++pos_;
    return t;
  }
  Token expect(std::string_view word) {
    Token t = next();
    if (t.text != word)
      throw ParseError(t.line, "expected '" + std::string(word) + "', found '" + std::string(t.text) + "'");
    return t;
  }
  std::size_t position() const { return pos_; }
  std::size_t last_line() const { return last_line_; }
  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t last_line_ = 1;
};

double to_number(const Token& t) {
  double v = 0.0;
  const char* first = t.text.data();
  const char* last = first + t.text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError(t.line, "expected a number, found '" + std::string(t.text) + "'");
  return v;
}

long to_integer(const Token& t) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (ec != std::errc() || ptr != t.text.data() + t.text.size() || v < 0)
    throw ParseError(t.line, "expected a nonnegative integer, found '" + std::string(t.text) + "'");
  return v;
}

Vec3 read_offset(Lexer& lex) {
  lex.expect("OFFSET");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = to_number(lex.next());
  return v;
}

bool is_end_site(Lexer& lex) {
  const Token& t = lex.peek();
  if (t.text == "End") {
    lex.next();
    lex.expect("Site");
    return true;
  }
  if (t.text == "EndSite") {
    lex.next();
    return true;
  }
  return false;
}

void parse_joint_body(Lexer& lex, std::vector<Joint>& joints, std::size_t self) {
  lex.expect("{");
  joints[self].offset = read_offset(lex);
  if (lex.peek().text == "CHANNELS") {
    lex.next();
    const Token count_tok = lex.next();
    const long count = to_integer(count_tok);
    for (long i = 0; i < count; ++i) {
      const Token label = lex.next();
      if (label.text == "JOINT" || label.text == "}" || label.text == "{")
        throw ParseError(label.line, "CHANNELS declares " + std::to_string(count) + " labels, found fewer");
      joints[self].channels.emplace_back(label.text);
    }
  }
  while (true) {
    const Token& t = lex.peek();
    if (t.text == "}") {
      lex.next();
      return;
    }
    if (t.text == "JOINT") {
      lex.next();
      const Token name = lex.next();
      Joint j;
      j.name = std::string(name.text);
      j.parent = static_cast<int>(self);
      joints.push_back(std::move(j));
      parse_joint_body(lex, joints, joints.size() - 1);
      continue;
    }
    if (is_end_site(lex)) {
      lex.expect("{");
      joints[self].end_site = read_offset(lex);
      lex.expect("}");
      continue;
    }
    throw ParseError(t.line, "unexpected token '" + std::string(t.text) + "' in joint '" +
                                 joints[self].name + "'");
  }
}

Skeleton parse_hierarchy_tokens(Lexer& lex) {
  if (lex.done() || lex.peek().text != "HIERARCHY")
    throw ParseError(lex.done() ? lex.last_line() : lex.peek().line, "missing HIERARCHY keyword");
  lex.next();
  const Token root = lex.expect("ROOT");
  const Token name = lex.next();
  std::vector<Joint> joints;
  Joint r;
  r.name = std::string(name.text);
  joints.push_back(std::move(r));
  parse_joint_body(lex, joints, 0);
  try {
    return Skeleton(std::move(joints));
  } catch (const ContractError& e) {
    throw ParseError(root.line, e.what());
  }
}

std::string format_fixed(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  std::string s(buf, ptr);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void write_joint(std::ostringstream& os, const Skeleton& sk,
                 const std::vector<std::vector<std::size_t>>& children, std::size_t j, int depth,
                 std::vector<std::size_t>& order) {
  const Joint& joint = sk.joint(j);
  const std::string ind(static_cast<std::size_t>(depth), '\t');
  os << ind << (depth == 0 ? "ROOT " : "JOINT ") << joint.name << '\n' << ind << "{\n";
  os << ind << "\tOFFSET " << format_fixed(joint.offset.x()) << ' ' << format_fixed(joint.offset.y())
     << ' ' << format_fixed(joint.offset.z()) << '\n';
  if (!joint.channels.empty()) {
    os << ind << "\tCHANNELS " << joint.channels.size();
    for (const auto& c : joint.channels) os << ' ' << c;
    os << '\n';
  }
  order.push_back(j);
  for (std::size_t c : children[j]) write_joint(os, sk, children, c, depth + 1, order);
  if (joint.end_site) {
    os << ind << "\tEnd Site\n" << ind << "\t{\n";
    os << ind << "\t\tOFFSET " << format_fixed(joint.end_site->x()) << ' '
       << format_fixed(joint.end_site->y()) << ' ' << format_fixed(joint.end_site->z()) << '\n';
    os << ind << "\t}\n";
  }
  os << ind << "}\n";
}

// Emits the hierarchy in depth-first order; `order` receives the joint visit order.
std::string hierarchy_text(const Skeleton& sk, std::vector<std::size_t>& order) {
  std::vector<std::vector<std::size_t>> children(sk.size());
  for (std::size_t j = 1; j < sk.size(); ++j)
    children[static_cast<std::size_t>(sk.joint(j).parent)].push_back(j);
  std::ostringstream os;
  os << "HIERARCHY\n";
  write_joint(os, sk, children, 0, 0, order);
  return os.str();
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

Skeleton parse_bvh_hierarchy(std::string_view text) {
  Lexer lex(text);
  Skeleton sk = parse_hierarchy_tokens(lex);
  if (!lex.done() && lex.peek().text != "MOTION")
    throw ParseError(lex.peek().line, "unexpected token '" + std::string(lex.peek().text) + "' after hierarchy");
  return sk;
}

BvhDocument parse_bvh(std::string_view text) {
  Lexer lex(text);
  BvhDocument doc;
  doc.skeleton = parse_hierarchy_tokens(lex);
  if (lex.done()) throw ParseError(lex.last_line(), "missing MOTION keyword");
  const Token motion = lex.next();
  if (motion.text != "MOTION") throw ParseError(motion.line, "missing MOTION keyword");

  Token frames_tok = lex.next();
  long frame_count = 0;
  if (frames_tok.text == "Frames:") {
    frame_count = to_integer(lex.next());
  } else if (frames_tok.text.starts_with("Frames:")) {
    Token rest{frames_tok.text.substr(7), frames_tok.line};
    frame_count = to_integer(rest);
  } else {
    throw ParseError(frames_tok.line, "expected 'Frames:'");
  }
  lex.expect("Frame");
  const Token time_kw = lex.next();
  Token time_tok = time_kw;
  if (time_kw.text == "Time:") {
    time_tok = lex.next();
  } else if (time_kw.text.starts_with("Time:")) {
    time_tok.text = time_kw.text.substr(5);
  } else {
    throw ParseError(time_kw.line, "expected 'Frame Time:'");
  }
  doc.frame_time = to_number(time_tok);
  if (!(doc.frame_time > 0.0)) throw ParseError(time_tok.line, "frame time must be positive");
  if (frame_count < 1) throw ParseError(frames_tok.line, "frame count must be at least 1");

  const std::size_t channels = doc.skeleton.channel_count();
  const auto& toks = lex.tokens();
  std::size_t i = lex.position();
  doc.frames.reserve(static_cast<std::size_t>(frame_count));
  while (i < toks.size()) {
    const std::size_t line = toks[i].line;
    std::size_t j = i;
    while (j < toks.size() && toks[j].line == line) ++j;
    if (doc.frames.size() == static_cast<std::size_t>(frame_count))
      throw ParseError(line, "frame count mismatch: declared " + std::to_string(frame_count) +
                                 " frames, found more motion rows");
    if (j - i != channels)
      throw ParseError(line, "channel count mismatch: expected " + std::to_string(channels) +
                                 " values, found " + std::to_string(j - i));
    std::vector<double> row(channels);
    for (std::size_t k = 0; k < channels; ++k) row[k] = to_number(toks[i + k]);
    doc.frames.push_back(std::move(row));
    i = j;
  }
  if (doc.frames.size() != static_cast<std::size_t>(frame_count))
    throw ParseError(lex.last_line(), "frame count mismatch: declared " + std::to_string(frame_count) +
                                          " frames, found " + std::to_string(doc.frames.size()));
  return doc;
}

std::string serialize_bvh_hierarchy(const Skeleton& skeleton) {
  std::vector<std::size_t> order;
  return hierarchy_text(skeleton, order);
}

std::string serialize_bvh(const BvhDocument& doc) {
  std::vector<std::size_t> order;
  std::string out = hierarchy_text(doc.skeleton, order);

  // Channel offsets per joint in the document's own order.
  std::vector<std::size_t> first(doc.skeleton.size());
  std::size_t acc = 0;
  for (std::size_t j = 0; j < doc.skeleton.size(); ++j) {
    first[j] = acc;
    acc += doc.skeleton.joint(j).channels.size();
  }

  std::ostringstream os;
  os << "MOTION\nFrames: " << doc.frames.size() << "\nFrame Time: " << format_fixed(doc.frame_time) << '\n';
  for (const auto& row : doc.frames) {
    bool sep = false;
    for (std::size_t j : order) {
      const std::size_t n = doc.skeleton.joint(j).channels.size();
      for (std::size_t k = 0; k < n; ++k) {
        if (sep) os << ' ';
        os << format_fixed(row.at(first[j] + k));
        sep = true;
      }
    }
    os << '\n';
  }
  return out + os.str();
}

BvhDocument load_bvh_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_bvh(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + std::string(e.what()));
  }
}

void save_bvh_file(const std::string& path, const BvhDocument& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << serialize_bvh(doc);
}

ChannelLayout::ChannelLayout(const Skeleton& skeleton) {
  joints_.resize(skeleton.size());
  std::size_t offset = 0;
  for (std::size_t j = 0; j < skeleton.size(); ++j) {
    const Joint& joint = skeleton.joint(j);
    JointChannels& jc = joints_[j];
    jc.first = offset;
    std::string order;
    for (std::size_t k = 0; k < joint.channels.size(); ++k) {
      const std::string& label = joint.channels[k];
      const bool pos = label.size() == 9 && iequals(std::string_view(label).substr(1), "position");
      const bool rot = label.size() == 9 && iequals(std::string_view(label).substr(1), "rotation");
      const char axis_c = static_cast<char>(std::toupper(static_cast<unsigned char>(label.empty() ? '?' : label[0])));
      const int axis = axis_c - 'X';
      if ((!pos && !rot) || axis < 0 || axis > 2)
        throw ConversionError("unsupported channel label '" + label + "' on joint '" + joint.name + "'");
      if (pos) {
        if (j != 0)
          throw ConversionError("unsupported channel label '" + label + "' on non-root joint '" + joint.name + "'");
        jc.position_slot[axis] = static_cast<int>(k);
      } else {
        if (jc.rotation_count == 3 || order.find(axis_c) != std::string::npos)
          throw ConversionError("repeated rotation axis on joint '" + joint.name + "'");
        jc.rotation_slot[jc.rotation_count] = static_cast<int>(k);
        jc.rotation_axis[jc.rotation_count] = axis;
        ++jc.rotation_count;
        order.push_back(axis_c);
      }
    }
    if (jc.rotation_count != 0 && jc.rotation_count != 3)
      throw ConversionError("joint '" + joint.name + "' must declare zero or three rotation channels");
    offset += joint.channels.size();
  }
  channel_count_ = offset;
}

void ChannelLayout::to_pose(std::span<const double> row, double unit_scale, Pose& out) const {
  if (row.size() != channel_count_)
    throw ContractError("channel row has " + std::to_string(row.size()) + " values, expected " +
                        std::to_string(channel_count_));
  out.rotations.resize(joints_.size());
  out.root_translation.setZero();
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    const JointChannels& jc = joints_[j];
    if (j == 0) {
      for (int a = 0; a < 3; ++a)
        if (jc.position_slot[a] >= 0)
          out.root_translation[a] = row[jc.first + static_cast<std::size_t>(jc.position_slot[a])] * unit_scale;
    }
    Quat q = Quat::Identity();
    for (int r = 0; r < jc.rotation_count; ++r) {
      Vec3 axis = Vec3::Zero();
      axis[jc.rotation_axis[r]] = 1.0;
      const double deg = row[jc.first + static_cast<std::size_t>(jc.rotation_slot[r])];
      q = q * Quat(Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, axis));
    }
    out.rotations[j] = q.normalized();
  }
}

Pose ChannelLayout::to_pose(std::span<const double> row, double unit_scale) const {
  Pose p;
  to_pose(row, unit_scale, p);
  return p;
}

std::vector<double> ChannelLayout::to_row(const Pose& pose, double unit_scale) const {
  if (pose.rotations.size() != joints_.size()) throw ContractError("pose/layout joint count mismatch");
  std::vector<double> row(channel_count_, 0.0);
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    const JointChannels& jc = joints_[j];
    if (j == 0) {
      for (int a = 0; a < 3; ++a)
        if (jc.position_slot[a] >= 0)
          row[jc.first + static_cast<std::size_t>(jc.position_slot[a])] = pose.root_translation[a] / unit_scale;
    }
    if (jc.rotation_count == 3) {
      std::string label;
      for (int r = 0; r < 3; ++r) label.push_back(static_cast<char>('X' + jc.rotation_axis[r]));
      const Vec3 e = quaternion_to_euler(pose.rotations[j], parse_rotation_order(label));
      for (int r = 0; r < 3; ++r) row[jc.first + static_cast<std::size_t>(jc.rotation_slot[r])] = e[r];
    }
  }
  return row;
}

Take frames_to_take(const Skeleton& skeleton, double frame_time,
                    std::span<const std::vector<double>> rows, double unit_scale, std::string id) {
  const ChannelLayout layout(skeleton);
  Take take;
  take.id = std::move(id);
  take.frame_time = frame_time;
  take.samples.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    take.samples[i].time = static_cast<double>(i) * frame_time;
    layout.to_pose(rows[i], unit_scale, take.samples[i].pose);
  }
  return take;
}

Take frames_to_take(const BvhDocument& doc, double unit_scale, std::string id) {
  return frames_to_take(doc.skeleton, doc.frame_time, doc.frames, unit_scale, std::move(id));
}

BvhDocument samples_to_bvh(const Skeleton& skeleton, std::span<const PoseSample> samples,
                           double frame_time, double unit_scale) {
  const ChannelLayout layout(skeleton);
  BvhDocument doc;
  doc.skeleton = skeleton;
  doc.frame_time = frame_time;
  doc.frames.reserve(samples.size());
  for (const auto& s : samples) doc.frames.push_back(layout.to_row(s.pose, unit_scale));
  return doc;
}

}  // namespace castelet
