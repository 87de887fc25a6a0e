// File formats: CSV dumps at full round-trip precision, JSON manifests, and
// the on-disk chart bundle (JSON metadata + raw double blob) used to resume
// runs per-chart.
#pragma once

#include <gradex/comparison_paths.hpp>
#include <gradex/driver.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace gradex::io {

using nlohmann::json;

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

inline std::string csv_string(const std::vector<std::string>& header, const Mat& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (int i = 0; i < rows.rows(); ++i) {
    for (int j = 0; j < rows.cols(); ++j) {
      if (j) out += ',';
      out += format_double(rows(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const Mat& rows) {
  if (header.size() != static_cast<std::size_t>(rows.cols()) && rows.rows() > 0)
    throw Error("CSV header width does not match data");
  write_text(path, csv_string(header, rows));
}

// Segment dump: step index, chart coordinates, λ, level, residual, and the
// lifted ambient coordinates.
inline void write_segment_csv(const std::filesystem::path& path,
                              const continuation::GESegment& segment) {
  if (segment.states.empty()) throw Error("empty segment");
  const int d = static_cast<int>(segment.states.front().u.size());
  const int n = static_cast<int>(segment.states.front().ambient.size());
  std::vector<std::string> header;
  header.push_back("step");
  for (int j = 0; j < d; ++j) header.push_back("u" + std::to_string(j + 1));
  header.push_back("lambda");
  header.push_back("L");
  header.push_back("residual");
  for (int j = 0; j < n; ++j) header.push_back("p" + std::to_string(j + 1));

  Mat rows(segment.states.size(), 1 + d + 3 + n);
  for (std::size_t i = 0; i < segment.states.size(); ++i) {
    const continuation::GEState& s = segment.states[i];
    int c = 0;
    rows(i, c++) = static_cast<double>(i);
    for (int j = 0; j < d; ++j) rows(i, c++) = s.u[j];
    rows(i, c++) = s.lambda;
    rows(i, c++) = s.level;
    rows(i, c++) = s.residual_norm;
    for (int j = 0; j < n; ++j) rows(i, c++) = s.ambient[j];
  }
  write_csv(path, header, rows);
}

inline void write_path_csv(const std::filesystem::path& path,
                           const comparison_paths::PathResult& result) {
  if (result.nodes.empty()) throw Error("empty path");
  const int n = static_cast<int>(result.nodes.front().size());
  std::vector<std::string> header;
  header.push_back("step");
  for (int j = 0; j < n; ++j) header.push_back("x" + std::to_string(j + 1));
  header.push_back("E");
  Mat rows(result.nodes.size(), 2 + n);
  for (std::size_t i = 0; i < result.nodes.size(); ++i) {
    int c = 0;
    rows(i, c++) = static_cast<double>(i);
    for (int j = 0; j < n; ++j) rows(i, c++) = result.nodes[i][j];
    rows(i, c++) = i < result.levels.size() ? result.levels[i] : 0.0;
  }
  write_csv(path, header, rows);
}

inline void write_cloud_csv(const std::filesystem::path& path, const sampling::PointCloud& cloud,
                            const Vec& energies) {
  const int n = cloud.ambient_dim();
  std::vector<std::string> header;
  for (int j = 0; j < n; ++j) header.push_back("x" + std::to_string(j + 1));
  header.push_back("E");
  Mat rows(cloud.size(), n + 1);
  rows.leftCols(n) = cloud.points;
  rows.col(n) = energies;
  write_csv(path, header, rows);
}

inline void write_embedding_csv(const std::filesystem::path& path,
                                const manifold_learning::DiffusionEmbedding& emb) {
  const int n = static_cast<int>(emb.train_points.cols());
  const Mat coords = emb.coords();
  std::vector<std::string> header;
  for (int j = 0; j < n; ++j) header.push_back("x" + std::to_string(j + 1));
  for (int j = 0; j < coords.cols(); ++j) header.push_back("u" + std::to_string(j + 1));
  Mat rows(emb.train_points.rows(), n + coords.cols());
  rows.leftCols(n) = emb.train_points;
  rows.rightCols(coords.cols()) = coords;
  write_csv(path, header, rows);
}

inline json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline json load_json(const std::filesystem::path& path) { return json::parse(read_text(path)); }

namespace detail {

// Named-matrix blob: raw little-endian doubles, row-major, offsets recorded
// in the accompanying JSON so the layout is self-describing.
struct BlobWriter {
  std::vector<double> data;
  json index = json::array();

  void add(const std::string& name, const Mat& m) {
    json entry;
    entry["name"] = name;
    entry["rows"] = m.rows();
    entry["cols"] = m.cols();
    entry["offset"] = data.size();
    index.push_back(entry);
    data.reserve(data.size() + m.size());
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  void add(const std::string& name, const Vec& v) { add(name, Mat(v.transpose())); }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw Error("write failed: " + path.string());
  }
};

struct BlobReader {
  std::vector<double> data;
  json index;

  BlobReader(const std::filesystem::path& path, json idx) : index(std::move(idx)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    if (bytes % sizeof(double) != 0) throw Error("blob size is not a whole number of doubles");
    data.resize(bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw Error("read failed: " + path.string());
  }

  Mat matrix(const std::string& name) const {
    for (const json& entry : index)
      if (entry["name"] == name) {
        const auto rows = entry["rows"].get<Eigen::Index>();
        const auto cols = entry["cols"].get<Eigen::Index>();
        const auto offset = entry["offset"].get<std::size_t>();
        if (offset + static_cast<std::size_t>(rows * cols) > data.size())
          throw Error("blob entry out of range: " + name);
        Mat m(rows, cols);
        std::size_t k = offset;
        for (Eigen::Index i = 0; i < rows; ++i)
          for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[k++];
        return m;
      }
    throw Error("blob entry missing: " + name);
  }
  Vec vector(const std::string& name) const {
    const Mat m = matrix(name);
    return m.row(0).transpose();
  }
};

inline void add_gp(BlobWriter& blob, json& meta, const std::string& prefix,
                   const surrogates::GPModel& gp) {
  meta[prefix + "_kernel"] =
      gp.kernel == surrogates::KernelFamily::SquaredExponential ? "se" : "matern52";
  meta[prefix + "_signal_variance"] = gp.hyper.signal_variance;
  meta[prefix + "_noise"] = gp.hyper.noise;
  meta[prefix + "_log_marginal"] = gp.log_marginal;
  blob.add(prefix + "_length_scales", gp.hyper.length_scales);
  blob.add(prefix + "_inputs", gp.inputs);
  blob.add(prefix + "_targets", gp.targets);
  blob.add(prefix + "_target_mean", gp.target_mean);
  blob.add(prefix + "_chol_lower", gp.chol_lower);
  blob.add(prefix + "_weights", gp.weights);
}

inline surrogates::GPModel read_gp(const BlobReader& blob, const json& meta,
                                   const std::string& prefix) {
  surrogates::GPModel gp;
  gp.kernel = meta.at(prefix + "_kernel") == "se" ? surrogates::KernelFamily::SquaredExponential
                                                  : surrogates::KernelFamily::Matern52;
  gp.hyper.signal_variance = meta.at(prefix + "_signal_variance").get<double>();
  gp.hyper.noise = meta.at(prefix + "_noise").get<double>();
  gp.log_marginal = meta.at(prefix + "_log_marginal").get<double>();
  gp.hyper.length_scales = blob.vector(prefix + "_length_scales");
  gp.inputs = blob.matrix(prefix + "_inputs");
  gp.targets = blob.matrix(prefix + "_targets");
  gp.target_mean = blob.vector(prefix + "_target_mean");
  gp.chol_lower = blob.matrix(prefix + "_chol_lower");
  gp.weights = blob.matrix(prefix + "_weights");
  return gp;
}

}  // namespace detail

// Chart bundle on disk: <base>.json holds scalars and the blob index,
// <base>.bin holds every matrix as raw doubles, so reload is bit-exact.
inline void save_chart(const std::filesystem::path& base, const surrogates::ChartModel& chart) {
  detail::BlobWriter blob;
  json meta;
  meta["format"] = "gradex-chart-v1";
  meta["chart_id"] = chart.chart_id;
  meta["boundary_threshold"] = chart.boundary_threshold;
  meta["median_reconstruction_error"] = chart.median_reconstruction_error;
  meta["energy_rmse"] = chart.energy_rmse;
  meta["embedding_epsilon"] = chart.embedding.epsilon;
  meta["embedding_alpha"] = chart.embedding.alpha;
  meta["embedding_trivial_eigenvalue"] = chart.embedding.trivial_eigenvalue;
  meta["embedding_selected"] = chart.embedding.selected;
  blob.add("embedding_eigenvalues", chart.embedding.eigenvalues);
  blob.add("embedding_eigenvectors", chart.embedding.eigenvectors);
  blob.add("embedding_train_points", chart.embedding.train_points);
  blob.add("embedding_kernel_mass", chart.embedding.kernel_mass);
  detail::add_gp(blob, meta, "lift", chart.lift_gp);
  detail::add_gp(blob, meta, "energy", chart.energy_gp);
  meta["blobs"] = blob.index;

  std::filesystem::path json_path = base;
  json_path += ".json";
  std::filesystem::path bin_path = base;
  bin_path += ".bin";
  blob.write(bin_path);
  write_json(json_path, meta);
}

inline surrogates::ChartModel load_chart(const std::filesystem::path& base) {
  std::filesystem::path json_path = base;
  json_path += ".json";
  std::filesystem::path bin_path = base;
  bin_path += ".bin";
  const json meta = load_json(json_path);
  if (meta.at("format") != "gradex-chart-v1") throw Error("unrecognized chart bundle format");
  detail::BlobReader blob(bin_path, meta.at("blobs"));

  surrogates::ChartModel chart;
  chart.chart_id = meta.at("chart_id").get<int>();
  chart.boundary_threshold = meta.at("boundary_threshold").get<double>();
  chart.median_reconstruction_error = meta.at("median_reconstruction_error").get<double>();
  chart.energy_rmse = meta.at("energy_rmse").get<double>();
  chart.embedding.epsilon = meta.at("embedding_epsilon").get<double>();
  chart.embedding.alpha = meta.at("embedding_alpha").get<double>();
  chart.embedding.trivial_eigenvalue = meta.at("embedding_trivial_eigenvalue").get<double>();
  chart.embedding.selected = meta.at("embedding_selected").get<std::vector<int>>();
  chart.embedding.eigenvalues = blob.vector("embedding_eigenvalues");
  chart.embedding.eigenvectors = blob.matrix("embedding_eigenvectors");
  chart.embedding.train_points = blob.matrix("embedding_train_points");
  chart.embedding.kernel_mass = blob.vector("embedding_kernel_mass");
  chart.lift_gp = detail::read_gp(blob, meta, "lift");
  chart.energy_gp = detail::read_gp(blob, meta, "energy");
  return chart;
}

inline json segment_summary_json(const driver::ChartRunSummary& s) {
  json j;
  j["chart_id"] = s.chart_id;
  j["cloud_size"] = s.cloud_size;
  j["epsilon"] = s.epsilon;
  j["boundary_threshold"] = s.boundary_threshold;
  j["median_reconstruction_error"] = s.median_reconstruction_error;
  j["energy_rmse"] = s.energy_rmse;
  j["exit_reason"] = s.exit_reason;
  j["states"] = s.segment.states.size();
  j["corrector_retries"] = s.segment.corrector_retries;
  j["entry_ambient"] = vec_to_json(s.entry_ambient);
  j["exit_ambient"] = vec_to_json(s.exit_ambient);
  j["exit_velocity_ambient"] = vec_to_json(s.exit_velocity_ambient);
  j["chaining_error"] = s.chaining_error;
  j["direction_angle_deg"] = s.direction_angle_deg;
  j["arclength_ambient"] = s.arclength_ambient;
  j["initial_step"] = s.initial_step;
  j["stall_retry"] = s.stall_retry;
  j["final_gradient_norm"] = s.segment.states.empty()
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : s.segment.states.back().gradient_norm;
  return j;
}

inline json run_record_json(const driver::RunRecord& record) {
  json j;
  j["converged"] = record.converged;
  j["total_charts"] = record.total_charts;
  j["final_point"] = vec_to_json(record.final_point);
  j["final_gradient_norm"] = record.final_gradient_norm;
  j["final_ambient_field_norm"] = record.final_ambient_field_norm;
  j["cumulative_arclength"] = record.cumulative_arclength;
  j["failure"] = record.failure;
  json charts = json::array();
  for (const driver::ChartRunSummary& s : record.charts) charts.push_back(segment_summary_json(s));
  j["charts"] = charts;
  return j;
}

}  // namespace gradex::io
