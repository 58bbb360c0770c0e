#include "domslam/graph_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>

#include "domslam/errors.hpp"
#include "domslam/text.hpp"

namespace domslam {

namespace {

constexpr const char* kHeader = "# domslam graph v1";

template <typename Vec>
void put_vector(std::ostream& out, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << format_double(v[i]);
}

template <typename Mat>
void put_upper(std::ostream& out, const Mat& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = r; c < m.cols(); ++c) out << ' ' << format_double(m(r, c));
  }
}

struct EdgeWriter {
  std::ostream& out;

  void operator()(const OdometryFactor& f) const {
    out << "EDGE_ODOM " << f.from << ' ' << f.to;
    put_vector(out, f.measured);
    put_upper(out, f.information);
    out << '\n';
  }
  void operator()(const PointFactor& f) const {
    out << "EDGE_POINT " << f.pose << ' ' << f.landmark;
    put_vector(out, f.measured);
    put_upper(out, f.information);
    out << '\n';
  }
  void operator()(const MotionFactor& f) const {
    out << "EDGE_MOTION " << f.landmark_k << ' ' << f.landmark_k1 << ' ' << f.motion;
    put_upper(out, f.information);
    out << '\n';
  }
};

class LineParser {
 public:
  LineParser(int line, std::vector<std::string> tokens) : line_(line), tokens_(std::move(tokens)) {}

  const std::string& tag() const { return tokens_.front(); }
  std::size_t remaining() const { return tokens_.size() - next_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }

  void expect_count(std::size_t count) const {
    if (tokens_.size() - 1 != count) {
      fail(tag() + " expects " + std::to_string(count) + " fields, got " + std::to_string(tokens_.size() - 1));
    }
  }

  const std::string& word() {
    if (next_ >= tokens_.size()) fail(tag() + " is truncated");
    return tokens_[next_++];
  }

  int integer() {
    const std::string& t = word();
    int value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) fail("invalid integer '" + t + "'");
    return value;
  }

  double real() {
    const std::string& t = word();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) fail("invalid number '" + t + "'");
    if (!std::isfinite(value)) fail("non-finite number '" + t + "'");
    return value;
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector() {
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v[i] = real();
    return v;
  }

  template <int N>
  Eigen::Matrix<double, N, N> information() {
    Eigen::Matrix<double, N, N> m;
    for (int r = 0; r < N; ++r) {
      for (int c = r; c < N; ++c) m(r, c) = m(c, r) = real();
    }
    if (Eigen::LLT<Eigen::Matrix<double, N, N>>(m).info() != Eigen::Success) {
      fail("information matrix is not positive definite");
    }
    return m;
  }

 private:
  int line_;
  std::vector<std::string> tokens_;
  std::size_t next_ = 1;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !space(line[i])) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

void parse_record(LineParser& p, FactorGraph& graph) {
  const std::string tag = p.tag();
  if (tag == "VERTEX_POSE") {
    p.expect_count(7);
    const int id = p.integer();
    graph.add_pose(id, p.vector<6>());
  } else if (tag == "VERTEX_POINT") {
    const int id = p.integer();
    LandmarkVertex vertex;
    vertex.estimate = p.vector<3>();
    vertex.point_id = id;
    bool seen_pid = false;
    while (p.remaining() > 0) {
      const std::string key = p.word();
      const int value = p.integer();
      if (key == "OBJ" && !vertex.object) {
        vertex.object = value;
      } else if (key == "STEP" && !vertex.step) {
        vertex.step = value;
      } else if (key == "PID" && !seen_pid) {
        vertex.point_id = value;
        seen_pid = true;
      } else {
        p.fail("unexpected or repeated point attribute '" + key + "'");
      }
    }
    graph.add_landmark(id, vertex);
  } else if (tag == "VERTEX_MOTION") {
    const int id = p.integer();
    MotionVertex vertex;
    vertex.estimate = p.vector<6>();
    bool seen_object = false;
    while (p.remaining() > 0) {
      const std::string key = p.word();
      const int value = p.integer();
      if (key == "OBJ" && !seen_object) {
        vertex.object = value;
        seen_object = true;
      } else if (key == "STEP" && !vertex.step) {
        vertex.step = value;
      } else {
        p.fail("unexpected or repeated motion attribute '" + key + "'");
      }
    }
    if (!seen_object) p.fail("VERTEX_MOTION requires OBJ");
    graph.add_motion(id, vertex);
  } else if (tag == "EDGE_ODOM") {
    p.expect_count(29);
    OdometryFactor f;
    f.from = p.integer();
    f.to = p.integer();
    f.measured = p.vector<6>();
    f.information = p.information<6>();
    graph.add_factor(f);
  } else if (tag == "EDGE_POINT") {
    p.expect_count(11);
    PointFactor f;
    f.pose = p.integer();
    f.landmark = p.integer();
    f.measured = p.vector<3>();
    f.information = p.information<3>();
    graph.add_factor(f);
  } else if (tag == "EDGE_MOTION") {
    p.expect_count(9);
    MotionFactor f;
    f.landmark_k = p.integer();
    f.landmark_k1 = p.integer();
    f.motion = p.integer();
    f.information = p.information<3>();
    graph.add_factor(f);
  } else if (tag == "FIX") {
    p.expect_count(1);
    graph.fix_pose(p.integer());
  } else {
    p.fail("unknown record '" + tag + "'");
  }
}

}  // namespace

void write_graph(std::ostream& out, const FactorGraph& graph) {
  out << kHeader << '\n';
  for (const auto& [id, tau] : graph.poses()) {
    out << "VERTEX_POSE " << id;
    put_vector(out, tau);
    out << '\n';
  }
  for (const auto& [id, l] : graph.landmarks()) {
    out << "VERTEX_POINT " << id;
    put_vector(out, l.estimate);
    if (l.object) out << " OBJ " << *l.object;
    if (l.step) out << " STEP " << *l.step;
    out << " PID " << l.point_id << '\n';
  }
  for (const auto& [id, m] : graph.motions()) {
    out << "VERTEX_MOTION " << id;
    put_vector(out, m.estimate);
    out << " OBJ " << m.object;
    if (m.step) out << " STEP " << *m.step;
    out << '\n';
  }
  for (const Factor& f : graph.factors()) std::visit(EdgeWriter{out}, f);
  for (int id : graph.fixed_poses()) out << "FIX " << id << '\n';
}

std::string format_graph(const FactorGraph& graph) {
  std::ostringstream out;
  write_graph(out, graph);
  return out.str();
}

FactorGraph read_graph(std::istream& in) {
  FactorGraph graph;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto tokens = split(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    LineParser parser(number, std::move(tokens));
    try {
      parse_record(parser, graph);
    } catch (const GraphError& e) {
      throw ParseError(number, e.what());
    }
  }
  try {
    graph.validate();
  } catch (const GraphError& e) {
    throw ParseError(number, e.what());
  }
  return graph;
}

FactorGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  return read_graph(in);
}

void write_graph_file(const std::filesystem::path& path, const FactorGraph& graph) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_graph(out, graph);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

FactorGraph read_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return read_graph(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path.string());
  }
}

FactorGraph ground_truth_graph(const Dataset& dataset) {
  FactorGraph graph;
  for (std::size_t k = 0; k < dataset.true_poses.size(); ++k) {
    graph.add_pose(static_cast<int>(k), logmap(dataset.true_poses[k], PiPolicy::kPickCanonical));
  }
  int next = 0;
  for (const auto& [pid, p] : dataset.true_static_points) {
    graph.add_landmark(next++, {p, pid, std::nullopt, std::nullopt});
  }
  for (const auto& [key, p] : dataset.true_dynamic_points) {
    graph.add_landmark(next++, {p, key.first, dataset.point_object.at(key.first), key.second});
  }
  next = 0;
  for (const auto& [key, h] : dataset.true_motions) {
    graph.add_motion(next++, {logmap(h, PiPolicy::kPickCanonical), key.first, key.second});
  }
  return graph;
}

}  // namespace domslam
