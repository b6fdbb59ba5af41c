#include "dppn/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dppn/error.hpp"

namespace dppn {

namespace {

std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw IoError("truncated file: " + path);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<char*>(b), 4);
}

// Exact box filter: source pixel (r, c) contributes to target pixels in
// proportion to the overlap of their footprints.
std::vector<std::uint8_t> resample_square(const std::vector<double>& src,
                                          int src_h, int src_w, int side) {
  std::vector<double> acc(static_cast<size_t>(side) * side, 0.0);
  std::vector<double> area(static_cast<size_t>(side) * side, 0.0);
  const double sy = static_cast<double>(side) / src_h;
  const double sx = static_cast<double>(side) / src_w;
  for (int r = 0; r < src_h; ++r) {
    const double y0 = r * sy, y1 = (r + 1) * sy;
    for (int c = 0; c < src_w; ++c) {
      const double x0 = c * sx, x1 = (c + 1) * sx;
      for (int tr = static_cast<int>(y0); tr < side && tr < y1; ++tr) {
        const double wy = std::min<double>(y1, tr + 1) - std::max<double>(y0, tr);
        if (wy <= 0) continue;
        for (int tc = static_cast<int>(x0); tc < side && tc < x1; ++tc) {
          const double wx =
              std::min<double>(x1, tc + 1) - std::max<double>(x0, tc);
          if (wx <= 0) continue;
          acc[static_cast<size_t>(tr) * side + tc] +=
              wx * wy * src[static_cast<size_t>(r) * src_w + c];
          area[static_cast<size_t>(tr) * side + tc] += wx * wy;
        }
      }
    }
  }
  std::vector<std::uint8_t> out(acc.size());
  for (size_t i = 0; i < acc.size(); ++i) {
    const double v = area[i] > 0 ? acc[i] / area[i] : 0.0;
    out[i] = static_cast<std::uint8_t>(
        std::clamp(std::llround(v), 0ll, 255ll));
  }
  return out;
}

struct RawImage {
  int w = 0, h = 0;
  std::vector<double> pixels;  // 0..255
};

RawImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  auto next_token = [&]() -> std::string {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw IoError("truncated PGM header: " + path);
  };
  const std::string magic = next_token();
  if (magic != "P5" && magic != "P2") {
    throw IoError("not a PGM file: " + path);
  }
  RawImage img;
  img.w = std::stoi(next_token());
  img.h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (img.w <= 0 || img.h <= 0 || maxval <= 0 || maxval > 255) {
    throw IoError("unsupported PGM geometry in " + path);
  }
  img.pixels.resize(static_cast<size_t>(img.w) * img.h);
  if (magic == "P5") {
    in.get();  // the single whitespace after maxval
    std::vector<unsigned char> buf(img.pixels.size());
    if (!in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size()))) {
      throw IoError("truncated PGM data: " + path);
    }
    for (size_t i = 0; i < buf.size(); ++i) img.pixels[i] = buf[i];
  } else {
    for (double& p : img.pixels) {
      int v;
      if (!(in >> v)) throw IoError("truncated PGM data: " + path);
      p = v;
    }
  }
  const double scale = 255.0 / maxval;
  for (double& p : img.pixels) p *= scale;
  return img;
}

}  // namespace

Eigen::MatrixXd dataset_rows(const ImageDataset& data, int first, int count) {
  const int stride = data.side * data.side;
  if (first < 0 || count < 0 || first + count > data.count()) {
    throw IoError("dataset slice out of range");
  }
  Eigen::MatrixXd m(count, stride);
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < stride; ++j) {
      m(i, j) =
          data.pixels[static_cast<size_t>(first + i) * stride + j] / 255.0;
    }
  }
  return m;
}

Eigen::MatrixXd dataset_rows(const ImageDataset& data,
                             const std::vector<int>& indices) {
  const int stride = data.side * data.side;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(indices.size()), stride);
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= data.count()) {
      throw IoError("dataset index out of range");
    }
    for (int j = 0; j < stride; ++j) {
      m(static_cast<Eigen::Index>(i), j) =
          data.pixels[static_cast<size_t>(indices[i]) * stride + j] / 255.0;
    }
  }
  return m;
}

ImageDataset load_idx(const std::string& path, bool resize_to_28) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::uint32_t magic = read_u32_be(in, path);
  if (magic != 0x00000803u) {
    std::ostringstream msg;
    msg << "bad IDX magic 0x" << std::hex << magic << " in " << path;
    throw IoError(msg.str());
  }
  const std::uint32_t n = read_u32_be(in, path);
  const std::uint32_t rows = read_u32_be(in, path);
  const std::uint32_t cols = read_u32_be(in, path);
  if ((rows != 28 || cols != 28) && !resize_to_28) {
    throw IoError("IDX images are not 28x28 in " + path);
  }
  std::vector<std::uint8_t> raw(static_cast<size_t>(n) * rows * cols);
  if (!in.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(raw.size()))) {
    throw IoError("truncated file: " + path);
  }
  ImageDataset data;
  data.side = 28;
  data.source = path;
  if (rows == 28 && cols == 28) {
    data.pixels = std::move(raw);
  } else {
    data.pixels.reserve(static_cast<size_t>(n) * 28 * 28);
    std::vector<double> img(static_cast<size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < img.size(); ++j) {
        img[j] = raw[static_cast<size_t>(i) * img.size() + j];
      }
      auto small = resample_square(img, static_cast<int>(rows),
                                   static_cast<int>(cols), 28);
      data.pixels.insert(data.pixels.end(), small.begin(), small.end());
    }
  }
  return data;
}

void write_idx(const ImageDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_u32_be(out, 0x00000803u);
  write_u32_be(out, static_cast<std::uint32_t>(data.count()));
  write_u32_be(out, static_cast<std::uint32_t>(data.side));
  write_u32_be(out, static_cast<std::uint32_t>(data.side));
  out.write(reinterpret_cast<const char*>(data.pixels.data()),
            static_cast<std::streamsize>(data.pixels.size()));
  if (!out) throw IoError("write failed: " + path);
}

ImageDataset load_image_dir(const std::string& path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) throw IoError("not a directory: " + path);
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no PGM images under " + path);

  ImageDataset data;
  data.side = 28;
  data.source = path;
  for (const std::string& file : files) {
    RawImage img = load_pgm(file);
    double mean = 0.0;
    for (double p : img.pixels) mean += p;
    mean /= static_cast<double>(img.pixels.size());
    if (mean > 127.5) {  // ink is dark on light: flip so ink is high
      for (double& p : img.pixels) p = 255.0 - p;
    }
    auto small = resample_square(img.pixels, img.h, img.w, 28);
    for (std::uint8_t& p : small) p = p >= 128 ? 255 : 0;
    data.pixels.insert(data.pixels.end(), small.begin(), small.end());
  }
  return data;
}

void write_pgm(const Eigen::MatrixXd& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const long long v = std::llround(image(r, c));
      out.put(static_cast<char>(std::clamp(v, 0ll, 255ll)));
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_grid_pgm(const std::vector<Eigen::MatrixXd>& images, int cols,
                    const std::string& path) {
  if (images.empty() || cols < 1) throw IoError("empty image grid");
  const Eigen::Index h = images[0].rows();
  const Eigen::Index w = images[0].cols();
  for (const auto& img : images) {
    if (img.rows() != h || img.cols() != w) {
      throw IoError("grid images differ in shape");
    }
  }
  const int rows = (static_cast<int>(images.size()) + cols - 1) / cols;
  Eigen::MatrixXd canvas = Eigen::MatrixXd::Zero(rows * h, cols * w);
  for (size_t i = 0; i < images.size(); ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i) / cols;
    const Eigen::Index c = static_cast<Eigen::Index>(i) % cols;
    canvas.block(r * h, c * w, h, w) = images[i];
  }
  write_pgm(canvas, path);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_genome(const Genome& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "DPPN1\n";
  out << "dims " << g.input_dim << ' ' << g.output_dim << '\n';
  out << "n_mod " << g.n_mod << '\n';
  out << "seed " << g.rng_seed << '\n';
  out << "nodes " << g.nodes.size() << '\n';
  for (const Node& n : g.nodes) {
    out << "node " << n.id << ' ' << node_kind_name(n.kind) << ' '
        << transfer_name(n.transfer) << '\n';
    if (n.linear) {
      out << "linear " << n.linear->weights.rows() << '\n';
      for (Eigen::Index r = 0; r < n.linear->weights.rows(); ++r) {
        out << "lrow";
        for (Eigen::Index c = 0; c < n.linear->weights.cols(); ++c) {
          out << ' ' << format_double(n.linear->weights(r, c));
        }
        out << '\n';
      }
      out << "lbias";
      for (Eigen::Index r = 0; r < n.linear->bias.size(); ++r) {
        out << ' ' << format_double(n.linear->bias[r]);
      }
      out << '\n';
    }
  }
  out << "edges " << g.edges.size() << '\n';
  for (const Edge& e : g.edges) {
    out << "edge " << e.from << ' ' << e.to << ' ' << e.tap << ' ' << e.slot
        << ' ' << format_double(e.weight) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Genome load_genome(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  auto next_line = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw IoError("truncated genome file: " + path);
    return std::istringstream(line);
  };
  auto expect = [&](std::istringstream& ss, const char* key) {
    std::string word;
    if (!(ss >> word) || word != key) {
      throw IoError("expected '" + std::string(key) + "' in " + path +
                    ", got: " + line);
    }
  };

  {
    auto ss = next_line();
    std::string version;
    ss >> version;
    if (version != "DPPN1") {
      throw IoError("unsupported genome format version in " + path);
    }
  }
  Genome g;
  {
    auto ss = next_line();
    expect(ss, "dims");
    if (!(ss >> g.input_dim >> g.output_dim)) {
      throw IoError("bad dims line in " + path);
    }
  }
  {
    auto ss = next_line();
    expect(ss, "n_mod");
    if (!(ss >> g.n_mod)) throw IoError("bad n_mod line in " + path);
  }
  {
    auto ss = next_line();
    expect(ss, "seed");
    if (!(ss >> g.rng_seed)) throw IoError("bad seed line in " + path);
  }
  size_t node_count = 0;
  {
    auto ss = next_line();
    expect(ss, "nodes");
    if (!(ss >> node_count)) throw IoError("bad nodes line in " + path);
  }
  for (size_t i = 0; i < node_count; ++i) {
    auto ss = next_line();
    expect(ss, "node");
    Node n;
    std::string kind, transfer;
    if (!(ss >> n.id >> kind >> transfer)) {
      throw IoError("bad node line in " + path + ": " + line);
    }
    n.kind = node_kind_from_name(kind);
    n.transfer = transfer_from_name(transfer);
    const auto peek = in.peek();
    if (peek == 'l') {  // linear block belongs to this node
      auto ls = next_line();
      expect(ls, "linear");
      int dim = 0;
      if (!(ls >> dim) || dim < 1) throw IoError("bad linear line in " + path);
      LinearLayer layer;
      layer.weights.resize(dim, dim);
      layer.bias.resize(dim);
      for (int r = 0; r < dim; ++r) {
        auto rs = next_line();
        expect(rs, "lrow");
        for (int c = 0; c < dim; ++c) {
          if (!(rs >> layer.weights(r, c))) {
            throw IoError("bad lrow line in " + path);
          }
        }
      }
      auto bs = next_line();
      expect(bs, "lbias");
      for (int r = 0; r < dim; ++r) {
        if (!(bs >> layer.bias[r])) throw IoError("bad lbias line in " + path);
      }
      n.linear = std::move(layer);
    }
    g.nodes.push_back(std::move(n));
  }
  size_t edge_count = 0;
  {
    auto ss = next_line();
    expect(ss, "edges");
    if (!(ss >> edge_count)) throw IoError("bad edges line in " + path);
  }
  for (size_t i = 0; i < edge_count; ++i) {
    auto ss = next_line();
    expect(ss, "edge");
    Edge e;
    if (!(ss >> e.from >> e.to >> e.tap >> e.slot >> e.weight)) {
      throw IoError("bad edge line in " + path + ": " + line);
    }
    g.edges.push_back(e);
  }
  return validated(g);
}

void write_metrics_csv(const RunMetrics& metrics, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "tournament,winner_slot,loser_slot,winner_fitness,loser_fitness,"
         "best_fitness,best_param_count\n";
  for (const MetricsRow& r : metrics.rows) {
    out << r.tournament << ',' << r.winner_slot << ',' << r.loser_slot << ','
        << format_double(r.winner_fitness) << ','
        << format_double(r.loser_fitness) << ','
        << format_double(r.best_fitness) << ',' << r.best_param_count << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

RunMetrics parse_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty metrics file: " + path);
  RunMetrics metrics;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    MetricsRow r;
    char comma;
    if (!(ss >> r.tournament >> comma >> r.winner_slot >> comma >>
          r.loser_slot >> comma >> r.winner_fitness >> comma >>
          r.loser_fitness >> comma >> r.best_fitness >> comma >>
          r.best_param_count)) {
      throw IoError("bad metrics row in " + path + ": " + line);
    }
    metrics.rows.push_back(r);
  }
  return metrics;
}

}  // namespace dppn
