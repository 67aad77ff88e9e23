#include "core/serialize.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace anovanet {

using nlohmann::json;

namespace {

constexpr const char* kMlpMagic = "ANVMLP1\n";
constexpr const char* kModelMagic = "ANVMDL1\n";
constexpr const char* kDataMagic = "ANVDAT1\n";

void write_magic(std::ostream& os, const char* magic) { os.write(magic, 8); }

void expect_magic(std::istream& is, const char* magic) {
  char buf[8];
  is.read(buf, 8);
  if (!is || std::memcmp(buf, magic, 8) != 0)
    throw std::runtime_error("bad magic: not a recognized file");
}

void write_header(std::ostream& os, const json& header) {
  const std::string text = header.dump();
  const std::uint32_t len = static_cast<std::uint32_t>(text.size());
  os.write(reinterpret_cast<const char*>(&len), 4);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

json read_header(std::istream& is) {
  std::uint32_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 4);
  if (!is || len > (1u << 28)) throw std::runtime_error("corrupt header length");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("truncated header");
  return json::parse(text);
}

void write_f64(std::ostream& os, const double* p, std::size_t count) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * 8));
}

void read_f64(std::istream& is, double* p, std::size_t count) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * 8));
  if (!is) throw std::runtime_error("truncated payload");
}

void write_mlp_payload(std::ostream& os, const Mlp& net) {
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    const Eigen::MatrixXd& W = net.W[l];
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) {
        const double v = W(r, c);
        write_f64(os, &v, 1);
      }
    write_f64(os, net.b[l].data(), static_cast<std::size_t>(net.b[l].size()));
  }
}

Mlp read_mlp_payload(std::istream& is, const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw std::runtime_error("corrupt layer sizes");
  Mlp net;
  net.sizes = sizes;
  net.seed = seed;
  net.W.resize(sizes.size() - 1);
  net.b.resize(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.W[l].resize(sizes[l + 1], sizes[l]);
    net.b[l].resize(sizes[l + 1]);
    for (Eigen::Index r = 0; r < net.W[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.W[l].cols(); ++c) read_f64(is, &net.W[l](r, c), 1);
    read_f64(is, net.b[l].data(), static_cast<std::size_t>(net.b[l].size()));
  }
  return net;
}

void write_grid_payload(std::ostream& os, const GridFn& g) {
  write_f64(os, g.xs.data(), g.xs.size());
  write_f64(os, g.ys.data(), g.ys.size());
}

GridFn read_grid_payload(std::istream& is, std::size_t count) {
  std::vector<double> xs(count), ys(count);
  read_f64(is, xs.data(), count);
  read_f64(is, ys.data(), count);
  return GridFn(std::move(xs), std::move(ys));
}

json mlp_source_header(const Mlp& net) {
  return json{{"kind", "mlp"}, {"layer_sizes", net.sizes}, {"seed", net.seed}};
}

}  // namespace

void save_mlp(const Mlp& net, std::ostream& os) {
  write_magic(os, kMlpMagic);
  json header = mlp_source_header(net);
  header["format"] = 1;
  write_header(os, header);
  write_mlp_payload(os, net);
  if (!os) throw std::runtime_error("write failed");
}

Mlp load_mlp(std::istream& is) {
  expect_magic(is, kMlpMagic);
  const json header = read_header(is);
  if (header.at("format").get<int>() != 1) throw std::runtime_error("unsupported format version");
  return read_mlp_payload(is, header.at("layer_sizes").get<std::vector<int>>(),
                          header.at("seed").get<std::uint64_t>());
}

namespace {

json uni_source_header(const UniComponent& comp) {
  if (const auto* net = std::get_if<Mlp>(&comp.source)) return mlp_source_header(*net);
  if (const auto* h = std::get_if<HarmonicUni>(&comp.source)) {
    json terms = json::array();
    for (const auto& t : h->terms) terms.push_back(json::array({t.a, t.k}));
    return json{{"kind", "harmonic1"}, {"terms", terms}};
  }
  if (const auto* bmp = std::get_if<BumpUni>(&comp.source)) {
    return json{{"kind", "bump1"},
                {"amp", bmp->amp},
                {"h", bmp->h},
                {"beta", bmp->beta},
                {"cells", bmp->cells}};
  }
  const auto& g = std::get<GridFn>(comp.source);
  return json{{"kind", "grid"}, {"nodes", g.xs.size()}};
}

json bi_source_header(const BiComponent& comp) {
  if (const auto* net = std::get_if<Mlp>(&comp.source)) return mlp_source_header(*net);
  if (const auto* h = std::get_if<HarmonicBi>(&comp.source)) {
    json terms = json::array();
    for (const auto& t : h->terms) terms.push_back(json::array({t.b, t.p, t.q}));
    return json{{"kind", "harmonic2"}, {"terms", terms}};
  }
  const auto& bmp = std::get<BumpBi>(comp.source);
  json cells = json::array();
  for (const auto& [a, b] : bmp.cells) cells.push_back(json::array({a, b}));
  return json{{"kind", "bump2"},
              {"amp", bmp.amp},
              {"h", bmp.h},
              {"beta", bmp.beta},
              {"cells", cells}};
}

json grid_counts(const std::vector<GridFn>& grids) {
  json counts = json::array();
  for (const auto& g : grids) counts.push_back(g.xs.size());
  return counts;
}

void read_uni_source(std::istream& is, const json& src, UniComponent& comp) {
  const std::string kind = src.at("kind").get<std::string>();
  if (kind == "mlp")
    comp.source = read_mlp_payload(is, src.at("layer_sizes").get<std::vector<int>>(),
                                   src.at("seed").get<std::uint64_t>());
  else if (kind == "harmonic1") {
    HarmonicUni h;
    for (const auto& t : src.at("terms")) h.terms.push_back({t.at(0).get<double>(), t.at(1).get<int>()});
    comp.source = std::move(h);
  } else if (kind == "bump1") {
    BumpUni bmp;
    bmp.amp = src.at("amp").get<double>();
    bmp.h = src.at("h").get<double>();
    bmp.beta = src.at("beta").get<double>();
    bmp.cells = src.at("cells").get<std::vector<int>>();
    comp.source = std::move(bmp);
  } else if (kind == "grid")
    comp.source = read_grid_payload(is, src.at("nodes").get<std::size_t>());
  else
    throw std::runtime_error("unknown component source kind: " + kind);
}

void read_bi_source(std::istream& is, const json& src, BiComponent& comp) {
  const std::string kind = src.at("kind").get<std::string>();
  if (kind == "mlp")
    comp.source = read_mlp_payload(is, src.at("layer_sizes").get<std::vector<int>>(),
                                   src.at("seed").get<std::uint64_t>());
  else if (kind == "harmonic2") {
    HarmonicBi h;
    for (const auto& t : src.at("terms"))
      h.terms.push_back({t.at(0).get<double>(), t.at(1).get<int>(), t.at(2).get<int>()});
    comp.source = std::move(h);
  } else if (kind == "bump2") {
    BumpBi bmp;
    bmp.amp = src.at("amp").get<double>();
    bmp.h = src.at("h").get<double>();
    bmp.beta = src.at("beta").get<double>();
    for (const auto& c : src.at("cells"))
      bmp.cells.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
    comp.source = std::move(bmp);
  } else
    throw std::runtime_error("unknown component source kind: " + kind);
}

std::vector<GridFn> read_grids(std::istream& is, const json& counts) {
  std::vector<GridFn> grids;
  for (const auto& c : counts) grids.push_back(read_grid_payload(is, c.get<std::size_t>()));
  return grids;
}

}  // namespace

void save_model(const StructuredModel& m, std::ostream& os) {
  write_magic(os, kModelMagic);
  json header{{"format", 1}, {"d", m.d}, {"B", m.B}, {"mu", m.mu}};
  json uni = json::array();
  for (const auto& [j, comp] : m.uni)
    uni.push_back(json{{"j", j},
                       {"shift", comp.shift},
                       {"source", uni_source_header(comp)},
                       {"addends", grid_counts(comp.addends)}});
  json bi = json::array();
  for (const auto& [jk, comp] : m.bi)
    bi.push_back(json{{"j", jk.first},
                      {"k", jk.second},
                      {"shift", comp.shift},
                      {"source", bi_source_header(comp)},
                      {"addends_x", grid_counts(comp.addends_x)},
                      {"addends_y", grid_counts(comp.addends_y)}});
  header["uni"] = std::move(uni);
  header["bi"] = std::move(bi);
  write_header(os, header);

  for (const auto& [j, comp] : m.uni) {
    if (const auto* net = std::get_if<Mlp>(&comp.source)) write_mlp_payload(os, *net);
    if (const auto* g = std::get_if<GridFn>(&comp.source)) write_grid_payload(os, *g);
    for (const auto& g : comp.addends) write_grid_payload(os, g);
  }
  for (const auto& [jk, comp] : m.bi) {
    if (const auto* net = std::get_if<Mlp>(&comp.source)) write_mlp_payload(os, *net);
    for (const auto& g : comp.addends_x) write_grid_payload(os, g);
    for (const auto& g : comp.addends_y) write_grid_payload(os, g);
  }
  if (!os) throw std::runtime_error("write failed");
}

StructuredModel load_model(std::istream& is) {
  expect_magic(is, kModelMagic);
  const json header = read_header(is);
  if (header.at("format").get<int>() != 1) throw std::runtime_error("unsupported format version");
  StructuredModel m;
  m.d = header.at("d").get<int>();
  m.B = header.at("B").get<double>();
  m.mu = header.at("mu").get<double>();
  for (const auto& entry : header.at("uni")) {
    UniComponent comp;
    comp.shift = entry.at("shift").get<double>();
    read_uni_source(is, entry.at("source"), comp);
    comp.addends = read_grids(is, entry.at("addends"));
    m.uni[entry.at("j").get<int>()] = std::move(comp);
  }
  for (const auto& entry : header.at("bi")) {
    BiComponent comp;
    comp.shift = entry.at("shift").get<double>();
    read_bi_source(is, entry.at("source"), comp);
    comp.addends_x = read_grids(is, entry.at("addends_x"));
    comp.addends_y = read_grids(is, entry.at("addends_y"));
    m.bi[{entry.at("j").get<int>(), entry.at("k").get<int>()}] = std::move(comp);
  }
  m.check_valid();
  return m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_dataset_csv(const Dataset& ds, std::ostream& os) {
  const int d = ds.d();
  for (int j = 1; j <= d; ++j) os << "x" << j << ",";
  os << "y\n";
  for (long i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < d; ++j) os << format_double(ds.X(i, j)) << ",";
    os << format_double(ds.y(i)) << "\n";
  }
  if (!os) throw std::runtime_error("write failed");
}

Dataset load_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cols;
  std::stringstream hs(line);
  std::string field;
  while (std::getline(hs, field, ',')) cols.push_back(field);
  if (cols.size() < 2 || cols.back() != "y")
    throw std::runtime_error("dataset header must be x1,...,xd,y");
  const int d = static_cast<int>(cols.size()) - 1;
  for (int j = 0; j < d; ++j)
    if (cols[static_cast<std::size_t>(j)] != "x" + std::to_string(j + 1))
      throw std::runtime_error("dataset header must be x1,...,xd,y");

  std::vector<double> values;
  long n = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ls(line);
    int got = 0;
    while (std::getline(ls, field, ',')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str()) throw std::runtime_error("bad numeric field: " + field);
      values.push_back(v);
      ++got;
    }
    if (got != d + 1) throw std::runtime_error("row has wrong column count");
    ++n;
  }
  Dataset ds;
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.X(i, j) = values[static_cast<std::size_t>(i * (d + 1) + j)];
    ds.y(i) = values[static_cast<std::size_t>(i * (d + 1) + d)];
  }
  return ds;
}

void save_dataset_bin(const Dataset& ds, std::ostream& os) {
  write_magic(os, kDataMagic);
  write_header(os, json{{"format", 1}, {"n", ds.n()}, {"d", ds.d()}, {"seed", ds.seed}});
  for (long i = 0; i < ds.n(); ++i)
    for (int j = 0; j < ds.d(); ++j) {
      const double v = ds.X(i, j);
      write_f64(os, &v, 1);
    }
  write_f64(os, ds.y.data(), static_cast<std::size_t>(ds.y.size()));
  if (!os) throw std::runtime_error("write failed");
}

Dataset load_dataset_bin(std::istream& is) {
  expect_magic(is, kDataMagic);
  const json header = read_header(is);
  if (header.at("format").get<int>() != 1) throw std::runtime_error("unsupported format version");
  Dataset ds;
  const long n = header.at("n").get<long>();
  const int d = header.at("d").get<int>();
  if (n < 0 || d < 1) throw std::runtime_error("corrupt dataset dimensions");
  ds.seed = header.at("seed").get<std::uint64_t>();
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (long i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) read_f64(is, &ds.X(i, j), 1);
  read_f64(is, ds.y.data(), static_cast<std::size_t>(n));
  return ds;
}

namespace {

template <typename Saver, typename T>
void save_to_file(const T& obj, const std::string& path, Saver saver) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  saver(obj, os);
}

template <typename Loader>
auto load_from_file(const std::string& path, Loader loader) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return loader(is);
}

}  // namespace

void save_mlp_file(const Mlp& net, const std::string& path) {
  save_to_file(net, path, [](const Mlp& n, std::ostream& os) { save_mlp(n, os); });
}
Mlp load_mlp_file(const std::string& path) {
  return load_from_file(path, [](std::istream& is) { return load_mlp(is); });
}
void save_model_file(const StructuredModel& m, const std::string& path) {
  save_to_file(m, path, [](const StructuredModel& x, std::ostream& os) { save_model(x, os); });
}
StructuredModel load_model_file(const std::string& path) {
  return load_from_file(path, [](std::istream& is) { return load_model(is); });
}
void save_dataset_csv_file(const Dataset& ds, const std::string& path) {
  save_to_file(ds, path, [](const Dataset& x, std::ostream& os) { save_dataset_csv(x, os); });
}
Dataset load_dataset_csv_file(const std::string& path) {
  return load_from_file(path, [](std::istream& is) { return load_dataset_csv(is); });
}
void save_dataset_bin_file(const Dataset& ds, const std::string& path) {
  save_to_file(ds, path, [](const Dataset& x, std::ostream& os) { save_dataset_bin(x, os); });
}
Dataset load_dataset_bin_file(const std::string& path) {
  return load_from_file(path, [](std::istream& is) { return load_dataset_bin(is); });
}

}  // namespace anovanet
