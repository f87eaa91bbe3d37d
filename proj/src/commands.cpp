// SPDX-License-Identifier: Apache-2.0

#include "sfcloops/commands.hpp"

#include "sfcloops/cache_model.hpp"
#include "sfcloops/csv.hpp"
#include "sfcloops/dataset.hpp"
#include "sfcloops/join.hpp"
#include "sfcloops/kmeans.hpp"
#include "sfcloops/matmul.hpp"
#include "sfcloops/report.hpp"
#include "sfcloops/rng.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace sfcloops::cli {

namespace {

using json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rate(double work, double seconds) { return seconds > 0.0 ? work / seconds : 0.0; }

/// Output target: "-" is the given stream, anything else a truncated file.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path == "-") {
      stream_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw UsageError("cannot open " + path + " for writing: " + std::strerror(errno));
      stream_ = file_.get();
    }
  }

  std::ostream& get() { return *stream_; }
  bool is_file() const { return file_ != nullptr; }

  void close(const std::string& path) {
    if (!file_) {
      stream_->flush();
      return;
    }
    file_->close();
    if (!*file_) throw UsageError("write to " + path + " failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

PointSet load_points(const std::string& path) {
  if (path == "-") return read_points_csv(std::cin, "<stdin>");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path + ": " + std::strerror(errno));
  return read_points_csv(in, path);
}

/// Report line destination: --report file (appended), else `out` unless the
/// data went there, else `err`.
struct ReportTarget {
  std::string path;

  void emit(const RunReport& r, bool data_on_out, std::ostream& out, std::ostream& err) const {
    const std::string line = to_json_line(r) + "\n";
    if (!path.empty()) {
      std::ofstream f(path, std::ios::binary | std::ios::app);
      if (!f) throw UsageError("cannot open " + path + " for writing: " + std::strerror(errno));
      f << line;
      return;
    }
    (data_on_out ? err : out) << line;
  }
};

struct Common {
  std::string curve = "hilbert";
  int workers = 1;
  bool verify = false;
  ReportTarget report;
};

void add_common(CLI::App* cmd, Common& c, bool with_curve = true) {
  if (with_curve) {
    cmd->add_option("--curve", c.curve, "Traversal curve")
        ->check(CLI::IsMember({"hilbert", "zorder", "peano"}))
        ->capture_default_str();
  }
  cmd->add_option("--workers", c.workers, "Worker threads (default $SFC_LOOPS_WORKERS or 1)")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  cmd->add_flag("--verify", c.verify, "Check the result against the reference implementation");
  cmd->add_option("--report", c.report.path, "Append the JSON report line to this file");
}

// ---------------------------------------------------------------- join

struct JoinRun {
  JoinResult result;
  double seconds = 0.0;
};

JoinRun run_join(const PointSet& points, double eps, const JoinOptions& opt, bool naive) {
  JoinRun run;
  run.seconds = timed([&] { run.result = naive ? naive_join(points, eps) : epsilon_join(points, eps, opt); });
  return run;
}

/// Empty when equal, else a description of the first difference.
std::string first_pair_difference(const std::vector<JoinPair>& got, const std::vector<JoinPair>& want) {
  auto show = [](const JoinPair& p) {
    return "(" + std::to_string(p.i) + "," + std::to_string(p.j) + "," + format_double(p.dist) + ")";
  };
  const std::size_t n = std::min(got.size(), want.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (!(got[k] == want[k])) return "pair " + std::to_string(k) + ": got " + show(got[k]) + ", expected " + show(want[k]);
  }
  if (got.size() > n) return "pair " + std::to_string(n) + ": unexpected " + show(got[n]);
  if (want.size() > n) return "pair " + std::to_string(n) + ": missing " + show(want[n]);
  return {};
}

// ---------------------------------------------------------------- kmeans

std::string first_history_difference(const KMeansModel& got, const KMeansModel& want) {
  const std::size_t n = std::min(got.history.size(), want.history.size());
  for (std::size_t it = 0; it < n; ++it) {
    const auto& a = got.history[it].assignments;
    const auto& b = want.history[it].assignments;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) {
        return "iteration " + std::to_string(it + 1) + ", point " + std::to_string(i) + ": got cluster " +
               std::to_string(a[i]) + ", expected " + std::to_string(b[i]);
      }
    }
  }
  if (got.history.size() != want.history.size()) {
    return "iteration count " + std::to_string(got.history.size()) + ", expected " + std::to_string(want.history.size());
  }
  return {};
}

json model_json(const KMeansModel& m) {
  json centroids = json::array();
  for (std::size_t c = 0; c < m.k; ++c) {
    const auto row = m.centroid(c);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"schema", "sfcloops.kmeans-model/1"}, {"k", m.k},           {"dims", m.dims},
          {"iterations", m.iterations},          {"converged", m.converged}, {"inertia", m.inertia},
          {"centroids", std::move(centroids)},   {"assignments", m.assignments}};
}

// ---------------------------------------------------------------- matmul

Matrix random_matrix(std::size_t rows, std::size_t cols, Xorshift64Star& rng) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
  return Matrix(rows, cols, std::move(v));
}

// ---------------------------------------------------------------- cachesim

CacheConfig parse_cache_config(const std::string& text) {
  const auto x = text.find('x');
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw UsageError("cache config '" + text + "' is not LINESxELEMS");
    }
    return v;
  };
  if (x == std::string::npos) throw UsageError("cache config '" + text + "' is not LINESxELEMS");
  return {number(std::string_view(text).substr(0, x)), number(std::string_view(text).substr(x + 1))};
}

// ---------------------------------------------------------------- bench

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

DatasetSpec dataset_from_json(const json& j) {
  DatasetSpec s;
  s.generator = parse_generator(get_or<std::string>(j, "generator", "uniform"));
  s.n = get_or<std::size_t>(j, "n", s.n);
  s.d = get_or<std::size_t>(j, "d", s.d);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  s.clusters = get_or<std::size_t>(j, "clusters", s.clusters);
  s.sigma = get_or<double>(j, "sigma", s.sigma);
  s.spread = get_or<double>(j, "spread", s.spread);
  s.periods = get_or<std::vector<double>>(j, "periods", s.periods);
  s.noise = get_or<double>(j, "noise", s.noise);
  s.stride = get_or<std::size_t>(j, "stride", s.stride);
  return s;
}

struct BenchOutcome {
  RunReport report;
  bool verify_failed = false;
  std::string failure;
};

BenchOutcome bench_run(const json& run, const PointSet& points, int default_workers_count) {
  BenchOutcome o;
  RunReport& r = o.report;
  r.name = get_or<std::string>(run, "name", "");
  const std::string kernel = get_or<std::string>(run, "kernel", "join");
  const bool naive = get_or<bool>(run, "naive", false);
  const bool verify = get_or<bool>(run, "verify", false);
  const int repeats = std::max(1, get_or<int>(run, "repeats", 1));
  r.command = kernel;
  r.workers = naive ? 1 : get_or<int>(run, "workers", default_workers_count);
  r.curve = naive ? "none" : get_or<std::string>(run, "curve", "hilbert");
  const CurveFamily family = naive ? CurveFamily::Hilbert : parse_curve_family(r.curve);
  if (r.workers < 1) throw UsageError("bench run '" + r.name + "': workers must be at least 1");
  r.parameters = {{"naive", naive}, {"repeats", repeats}};

  double best = 0.0;
  auto keep = [&](double t) { best = (best == 0.0 || t < best) ? t : best; };

  if (kernel == "join") {
    const double eps = run.at("eps").get<double>();
    JoinOptions opt;
    opt.curve = family;
    opt.workers = r.workers;
    opt.block_bits = get_or<int>(run, "block_bits", opt.block_bits);
    opt.reorder_dims = get_or<bool>(run, "reorder_dims", false);
    JoinRun last;
    for (int k = 0; k < repeats; ++k) {
      last = run_join(points, eps, opt, naive);
      keep(last.seconds);
    }
    r.parameters.update({{"n", points.size()}, {"d", points.dims()}, {"eps", eps}, {"block_bits", opt.block_bits},
                         {"pairs", last.result.pairs.size()}});
    r.throughput = rate(static_cast<double>(points.size()), best);
    r.throughput_unit = "points/s";
    if (!naive) r.schedule = last.result.schedule;
    if (verify && !naive) {
      const auto diff = first_pair_difference(last.result.pairs, naive_join(points, eps).pairs);
      r.verification = diff.empty() ? Verification::Exact : Verification::Failed;
      o.failure = diff;
    }
  } else if (kernel == "kmeans") {
    KMeansOptions opt;
    opt.k = run.at("k").get<std::size_t>();
    opt.max_iters = get_or<int>(run, "iters", opt.max_iters);
    opt.tol = get_or<double>(run, "tol", opt.tol);
    opt.seed = get_or<std::uint64_t>(run, "seed", opt.seed);
    opt.curve = family;
    opt.workers = r.workers;
    opt.point_block_bits = get_or<int>(run, "block_bits", opt.point_block_bits);
    opt.record_history = verify;
    KMeansModel last;
    for (int k = 0; k < repeats; ++k) {
      keep(timed([&] { last = naive ? naive_kmeans(points, opt) : kmeans(points, opt); }));
    }
    r.parameters.update({{"n", points.size()}, {"d", points.dims()}, {"k", opt.k}, {"iterations", last.iterations}});
    r.throughput = rate(static_cast<double>(points.size()) * last.iterations, best);
    r.throughput_unit = "point-iterations/s";
    if (!naive) r.schedule = last.schedule;
    if (verify && !naive) {
      const auto diff = first_history_difference(last, naive_kmeans(points, opt));
      r.verification = diff.empty() ? Verification::Exact : Verification::Failed;
      o.failure = diff;
    }
  } else if (kernel == "matmul") {
    const std::size_t n = get_or<std::size_t>(run, "size", 256);
    Xorshift64Star rng(get_or<std::uint64_t>(run, "seed", 1));
    const Matrix a = random_matrix(n, n, rng);
    const Matrix b = random_matrix(n, n, rng);
    MatmulOptions opt;
    opt.curve = family;
    opt.workers = r.workers;
    opt.block_bits = get_or<int>(run, "block_bits", opt.block_bits);
    opt.curve_dims = get_or<int>(run, "curve_dims", opt.curve_dims);
    Matrix c;
    for (int k = 0; k < repeats; ++k) {
      keep(timed([&] {
        if (naive) {
          c = naive_matmul(a, b);
        } else {
          auto res = matmul(a, b, opt);
          c = std::move(res.product);
          r.schedule = std::move(res.schedule);
        }
      }));
    }
    r.parameters.update({{"size", n}, {"block_bits", opt.block_bits}, {"curve_dims", opt.curve_dims}});
    r.throughput = rate(2.0 * static_cast<double>(n) * n * n, best);
    r.throughput_unit = "flop/s";
    if (verify && !naive) {
      const double e = max_relative_error(c, naive_matmul(a, b));
      r.verification = e <= 1e-12 ? Verification::Tolerance : Verification::Failed;
      r.tolerance = 1e-12;
      if (e > 1e-12) o.failure = "max relative error " + format_double(e);
    }
  } else {
    throw UsageError("bench run '" + r.name + "': unknown kernel '" + kernel + "'");
  }
  r.wall_seconds = best;
  o.verify_failed = r.verification == Verification::Failed;
  return o;
}

}  // namespace

int default_workers() {
  const char* v = std::getenv("SFC_LOOPS_WORKERS");
  if (v == nullptr || *v == '\0') return 1;
  int w = 0;
  const auto [ptr, ec] = std::from_chars(v, v + std::strlen(v), w);
  if (ec != std::errc() || *ptr != '\0' || w < 1 || w > 1024) {
    throw UsageError(std::string("SFC_LOOPS_WORKERS must be an integer in [1, 1024], got '") + v + "'");
  }
  return w;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Common common;
  try {
    common.workers = default_workers();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Loops over space-filling curves: data generation, kernels, cache and schedule reports", "sfcloops"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  std::function<int()> action;

  // gen
  DatasetSpec gen_spec;
  std::string gen_generator = "uniform", gen_output = "-", gen_centers;
  bool gen_header = false;
  {
    auto* cmd = app.add_subcommand("gen", "Write a synthetic data set as CSV");
    cmd->add_option("--generator", gen_generator, "uniform, mixture or signal")
        ->check(CLI::IsMember({"uniform", "mixture", "signal"}))
        ->capture_default_str();
    cmd->add_option("--n", gen_spec.n, "Rows")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--d", gen_spec.d, "Columns (window length for signal)")->check(CLI::Range(1, 64))->capture_default_str();
    cmd->add_option("--seed", gen_spec.seed, "Generator seed")->capture_default_str();
    cmd->add_option("--clusters", gen_spec.clusters, "Mixture clusters")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--sigma", gen_spec.sigma, "Mixture standard deviation")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--spread", gen_spec.spread, "Mixture centers lie in [0, spread)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--periods", gen_spec.periods, "Signal periods in samples, comma separated")->delimiter(',')->capture_default_str();
    cmd->add_option("--noise", gen_spec.noise, "Signal noise standard deviation")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--stride", gen_spec.stride, "Signal window stride")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_flag("--header", gen_header, "Write a header line x0,x1,...");
    cmd->add_option("-o,--output", gen_output, "Output file, - for stdout")->capture_default_str();
    cmd->add_option("--centers", gen_centers, "Also write the mixture centers to this CSV file");
    cmd->callback([&] {
      action = [&] {
        gen_spec.generator = parse_generator(gen_generator);
        const Dataset data = generate(gen_spec);
        Sink sink(gen_output, out);
        write_points_csv(sink.get(), data.points, gen_header);
        sink.close(gen_output);
        if (!gen_centers.empty()) {
          if (data.centers.empty()) throw UsageError("--centers needs --generator mixture");
          Sink c(gen_centers, out);
          write_points_csv(c.get(), PointSet(gen_spec.clusters, gen_spec.d, data.centers), gen_header);
          c.close(gen_centers);
        }
        return kExitOk;
      };
    });
  }

  // join
  std::string join_input, join_output = "-";
  double join_eps = 0.0;
  JoinOptions join_opt;
  {
    auto* cmd = app.add_subcommand("join", "Epsilon self-join of a CSV point set; writes i,j,dist lines");
    cmd->add_option("input", join_input, "Input CSV, - for stdin")->required();
    cmd->add_option("--eps", join_eps, "Distance threshold (inclusive)")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--block-bits", join_opt.block_bits, "Points per block = 2^bits")->check(CLI::Range(0, 20))->capture_default_str();
    cmd->add_option("--granule-bits", join_opt.granule_bits, "Scheduling granule over block pairs")->check(CLI::Range(0, 40))->capture_default_str();
    cmd->add_flag("--reorder-dims", join_opt.reorder_dims, "Sort dimensions by descending variance first");
    cmd->add_option("-o,--output", join_output, "Pairs file, - for stdout")->capture_default_str();
    add_common(cmd, common);
    cmd->callback([&] {
      action = [&] {
        const PointSet points = load_points(join_input);
        join_opt.curve = parse_curve_family(common.curve);
        join_opt.workers = common.workers;
        const JoinRun run = run_join(points, join_eps, join_opt, false);

        RunReport r;
        r.command = "join";
        r.curve = common.curve;
        r.workers = common.workers;
        r.wall_seconds = run.seconds;
        r.throughput = rate(static_cast<double>(points.size()), run.seconds);
        r.throughput_unit = "points/s";
        r.schedule = run.result.schedule;
        r.parameters = {{"input", join_input},
                        {"n", points.size()},
                        {"d", points.dims()},
                        {"eps", join_eps},
                        {"block_bits", join_opt.block_bits},
                        {"pairs", run.result.pairs.size()},
                        {"blocks", run.result.stats.blocks},
                        {"block_pairs", run.result.stats.block_pairs},
                        {"pruned_pairs", run.result.stats.pruned_pairs}};

        int code = kExitOk;
        if (common.verify) {
          const auto diff = first_pair_difference(run.result.pairs, naive_join(points, join_eps).pairs);
          r.verification = diff.empty() ? Verification::Exact : Verification::Failed;
          if (!diff.empty()) {
            err << "verification failed: " << diff << "\n";
            code = kExitVerifyFailed;
          }
        }
        Sink sink(join_output, out);
        write_pairs_csv(sink.get(), run.result.pairs);
        sink.close(join_output);
        common.report.emit(r, !sink.is_file(), out, err);
        return code;
      };
    });
  }

  // kmeans
  std::string km_input, km_output = "-";
  KMeansOptions km_opt;
  {
    auto* cmd = app.add_subcommand("kmeans", "Lloyd k-means of a CSV point set; writes a JSON model");
    cmd->add_option("input", km_input, "Input CSV, - for stdin")->required();
    cmd->add_option("--k", km_opt.k, "Clusters")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--iters", km_opt.max_iters, "Iteration limit")->check(CLI::Range(1, 1000000))->capture_default_str();
    cmd->add_option("--tol", km_opt.tol, "Stop when no centroid moves further")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd->add_option("--seed", km_opt.seed, "Initialization seed")->capture_default_str();
    cmd->add_option("--block-bits", km_opt.point_block_bits, "Points per block = 2^bits")->check(CLI::Range(0, 20))->capture_default_str();
    cmd->add_option("-o,--output", km_output, "Model file, - for stdout")->capture_default_str();
    add_common(cmd, common);
    cmd->callback([&] {
      action = [&] {
        const PointSet points = load_points(km_input);
        if (km_opt.k > points.size()) {
          throw UsageError("--k " + std::to_string(km_opt.k) + " exceeds the " + std::to_string(points.size()) + " points");
        }
        km_opt.curve = parse_curve_family(common.curve);
        km_opt.workers = common.workers;
        km_opt.record_history = common.verify;
        KMeansModel model;
        const double seconds = timed([&] { model = kmeans(points, km_opt); });

        RunReport r;
        r.command = "kmeans";
        r.curve = common.curve;
        r.workers = common.workers;
        r.wall_seconds = seconds;
        r.throughput = rate(static_cast<double>(points.size()) * model.iterations, seconds);
        r.throughput_unit = "point-iterations/s";
        r.schedule = model.schedule;
        r.parameters = {{"input", km_input},    {"n", points.size()},         {"d", points.dims()},
                        {"k", km_opt.k},        {"max_iters", km_opt.max_iters}, {"tol", km_opt.tol},
                        {"seed", km_opt.seed},  {"iterations", model.iterations}, {"converged", model.converged},
                        {"inertia", model.inertia}};

        int code = kExitOk;
        if (common.verify) {
          const auto diff = first_history_difference(model, naive_kmeans(points, km_opt));
          r.verification = diff.empty() ? Verification::Exact : Verification::Failed;
          if (!diff.empty()) {
            err << "verification failed: " << diff << "\n";
            code = kExitVerifyFailed;
          }
        }
        Sink sink(km_output, out);
        sink.get() << model_json(model).dump() << "\n";
        sink.close(km_output);
        common.report.emit(r, !sink.is_file(), out, err);
        return code;
      };
    });
  }

  // matmul
  std::size_t mm_size = 256;
  std::vector<std::size_t> mm_sizes;
  std::uint64_t mm_seed = 1;
  MatmulOptions mm_opt;
  {
    auto* cmd = app.add_subcommand("matmul", "Multiply seeded random matrices; writes a JSON report");
    cmd->add_option("--size", mm_size, "Square matrix side")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--sizes", mm_sizes, "M,K,N for an MxK times KxN product")->delimiter(',')->expected(3);
    cmd->add_option("--seed", mm_seed, "Matrix seed")->capture_default_str();
    cmd->add_option("--block-bits", mm_opt.block_bits, "Block side = 2^bits")->check(CLI::Range(0, 12))->capture_default_str();
    cmd->add_option("--curve-dims", mm_opt.curve_dims, "2: curve over (I,J); 3: curve over (I,J,K)")
        ->check(CLI::IsMember({2, 3}))
        ->capture_default_str();
    add_common(cmd, common);
    cmd->callback([&] {
      action = [&] {
        std::size_t m = mm_size, k = mm_size, n = mm_size;
        if (!mm_sizes.empty()) {
          m = mm_sizes[0], k = mm_sizes[1], n = mm_sizes[2];
          if (m < 1 || k < 1 || n < 1) throw UsageError("--sizes must be positive");
        }
        Xorshift64Star rng(mm_seed);
        const Matrix a = random_matrix(m, k, rng);
        const Matrix b = random_matrix(k, n, rng);
        mm_opt.curve = parse_curve_family(common.curve);
        mm_opt.workers = common.workers;
        MatmulResult res;
        const double seconds = timed([&] { res = matmul(a, b, mm_opt); });

        RunReport r;
        r.command = "matmul";
        r.curve = common.curve;
        r.workers = common.workers;
        r.wall_seconds = seconds;
        r.throughput = rate(2.0 * static_cast<double>(m) * k * n, seconds);
        r.throughput_unit = "flop/s";
        r.schedule = res.schedule;
        r.parameters = {{"m", m}, {"k", k}, {"n", n}, {"seed", mm_seed}, {"block_bits", mm_opt.block_bits},
                        {"curve_dims", mm_opt.curve_dims}};
        int code = kExitOk;
        if (common.verify) {
          const double e = max_relative_error(res.product, naive_matmul(a, b));
          r.parameters["max_relative_error"] = e;
          r.tolerance = 1e-12;
          r.verification = e <= 1e-12 ? Verification::Tolerance : Verification::Failed;
          if (e > 1e-12) {
            err << "verification failed: max relative error " << format_double(e) << " exceeds 1e-12\n";
            code = kExitVerifyFailed;
          }
        }
        common.report.emit(r, false, out, err);
        return code;
      };
    });
  }

  // cachesim
  std::vector<std::string> cs_patterns{"selfjoin"}, cs_curves{"hilbert", "zorder", "rowmajor"}, cs_configs{"64x64"};
  std::string cs_output = "-";
  SelfJoinPattern cs_join;
  MatmulPattern cs_mm;
  KMeansPattern cs_km;
  {
    auto* cmd = app.add_subcommand("cachesim", "Replay kernel access patterns through an LRU cache; writes CSV");
    cmd->add_option("--pattern", cs_patterns, "selfjoin, matmul2, matmul3, kmeans (comma separated)")
        ->delimiter(',')
        ->check(CLI::IsMember({"selfjoin", "matmul2", "matmul3", "kmeans"}))
        ->capture_default_str();
    cmd->add_option("--curves", cs_curves, "hilbert, zorder, peano, rowmajor (comma separated)")
        ->delimiter(',')
        ->check(CLI::IsMember({"hilbert", "zorder", "peano", "rowmajor"}))
        ->capture_default_str();
    cmd->add_option("--configs", cs_configs, "Cache configs LINESxELEMS (comma separated)")->delimiter(',')->capture_default_str();
    cmd->add_option("--n", cs_join.n, "Points (selfjoin, kmeans)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--d", cs_join.d, "Point dimensions (selfjoin, kmeans)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--k", cs_km.k, "Centroids (kmeans)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--point-block", cs_km.point_block, "Points per block (kmeans)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--centroid-block", cs_km.centroid_block, "Centroids per block (kmeans)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--blocks", cs_mm.blocks, "Blocks per matrix side (matmul)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--block", cs_mm.block, "Block side (matmul)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("-o,--output", cs_output, "CSV file, - for stdout")->capture_default_str();
    cmd->callback([&] {
      action = [&] {
        std::vector<CacheConfig> configs;
        for (const auto& c : cs_configs) configs.push_back(parse_cache_config(c));
        std::vector<AccessPattern> patterns;
        for (const auto& p : cs_patterns) {
          if (p == "selfjoin") {
            patterns.emplace_back(cs_join);
          } else if (p == "kmeans") {
            KMeansPattern km = cs_km;
            km.n = cs_join.n;
            km.d = cs_join.d;
            patterns.emplace_back(km);
          } else {
            MatmulPattern mm = cs_mm;
            mm.dims = p == "matmul3" ? 3 : 2;
            patterns.emplace_back(mm);
          }
        }
        std::vector<TraversalOrder> orders;
        for (const auto& c : cs_curves) orders.push_back(parse_order(c));
        const auto rows = compare_orders(patterns, configs, orders);
        Sink sink(cs_output, out);
        write_cache_report_csv(sink.get(), rows);
        sink.close(cs_output);
        return kExitOk;
      };
    });
  }

  // traverse
  std::vector<Coord> tr_bounds{16, 16};
  std::string tr_shape = "full", tr_simulate;
  std::vector<int> tr_monotone;
  int tr_granule_bits = kDefaultGranuleBits;
  bool tr_no_steal = false;
  {
    auto* cmd = app.add_subcommand("traverse", "Walk a loop domain in parallel and report the schedule");
    cmd->add_option("--bounds", tr_bounds, "Loop bounds, comma separated")->delimiter(',')->capture_default_str();
    cmd->add_option("--shape", tr_shape, "full, tri or band:<b>")->capture_default_str();
    cmd->add_option("--monotone-dims", tr_monotone, "Dimensions to process in ascending order, comma separated")
        ->delimiter(',');
    cmd->add_option("--granule-bits", tr_granule_bits, "Scheduling granule = 2^bits curve indices")
        ->check(CLI::Range(0, 62))
        ->capture_default_str();
    cmd->add_option("--simulate", tr_simulate, "Replay in virtual time with cost uniform or index")
        ->check(CLI::IsMember({"uniform", "index"}));
    cmd->add_flag("--no-steal", tr_no_steal, "Static packets only");
    add_common(cmd, common);
    cmd->callback([&] {
      action = [&] {
        const LoopDomain domain = LoopDomain::make(tr_bounds, parse_shape(tr_shape));
        const CurveSpec spec = embed(domain, parse_curve_family(common.curve), tr_monotone);
        const ExecOptions exec{common.workers, tr_granule_bits, !tr_no_steal};

        RunReport r;
        r.command = "traverse";
        r.curve = common.curve;
        r.workers = common.workers;
        r.parameters = {{"bounds", tr_bounds}, {"shape", to_string(domain.shape())}, {"monotone_dims", tr_monotone},
                        {"order", spec.order()}, {"tuples", domain.size()}, {"stealing", !tr_no_steal}};
        int code = kExitOk;
        using Seen = std::map<std::vector<Coord>, int>;
        Seen seen;
        if (!tr_simulate.empty()) {
          const bool by_index = tr_simulate == "index";
          r.parameters["simulate"] = tr_simulate;
          r.wall_seconds = timed([&] {
            r.schedule = simulate_schedule(domain, spec, exec, [by_index](const GridPoint&, Index i) {
              return by_index ? static_cast<double>(i) : 1.0;
            });
          });
        } else {
          r.wall_seconds = timed([&] {
            auto res = parallel_execute(
                domain, spec, exec, [] { return Seen{}; },
                [&](const GridPoint& p, Seen& acc) {
                  if (common.verify) ++acc[std::vector<Coord>(p.coords().begin(), p.coords().end())];
                },
                [](Seen& into, Seen&& from) {
                  for (auto& [k, v] : from) into[k] += v;
                });
            seen = std::move(res.value);
            r.schedule = std::move(res.report);
          });
        }
        r.throughput = rate(static_cast<double>(domain.size()), r.wall_seconds);
        r.throughput_unit = "tuples/s";
        if (common.verify && tr_simulate.empty()) {
          // brute-force enumeration of the bounding box
          std::string problem;
          std::vector<Coord> p(tr_bounds.size(), 0);
          Index expected = 0;
          for (;;) {
            GridPoint g(static_cast<int>(p.size()));
            for (std::size_t j = 0; j < p.size(); ++j) g[static_cast<int>(j)] = p[j];
            if (domain.contains(g)) {
              ++expected;
              const auto it = seen.find(p);
              const int count = it == seen.end() ? 0 : it->second;
              if (count != 1 && problem.empty()) problem = to_string(g) + " visited " + std::to_string(count) + " times";
            }
            std::size_t j = p.size();
            while (j > 0 && ++p[j - 1] == tr_bounds[j - 1]) p[--j] = 0;
            if (j == 0) break;
          }
          if (problem.empty() && seen.size() != expected) problem = "visited tuples outside the domain";
          if (problem.empty() && !tr_monotone.empty()) {
            std::vector<Coord> last;
            traverse(domain, spec, 0, [&](const GridPoint& g, int&) {
              std::vector<Coord> key;
              for (int d : tr_monotone) key.push_back(g[d]);
              if (key < last && problem.empty()) problem = "monotone order broken at " + to_string(g);
              last = std::move(key);
            });
          }
          r.verification = problem.empty() ? Verification::Exact : Verification::Failed;
          if (!problem.empty()) {
            err << "verification failed: " << problem << "\n";
            code = kExitVerifyFailed;
          }
        }
        common.report.emit(r, false, out, err);
        return code;
      };
    });
  }

  // bench
  std::string bench_suite, bench_output = "-";
  {
    auto* cmd = app.add_subcommand("bench", "Run a JSON suite of timed runs; writes JSON lines");
    cmd->add_option("suite", bench_suite, "Suite file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--output", bench_output, "JSON lines file, - for stdout")->capture_default_str();
    cmd->add_option("--workers", common.workers, "Default workers for runs that do not set them")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();
    cmd->callback([&] {
      action = [&] {
        std::ifstream in(bench_suite);
        json suite;
        try {
          suite = json::parse(in);
        } catch (const json::parse_error& e) {
          throw UsageError(bench_suite + ": " + e.what());
        }
        const json dataset = suite.value("dataset", json::object());
        const PointSet points = generate(dataset_from_json(dataset)).points;
        std::vector<BenchOutcome> outcomes;
        for (const auto& run : suite.at("runs")) outcomes.push_back(bench_run(run, points, common.workers));

        // one baseline per kernel; the last run marked as baseline wins
        std::map<std::string, double> baseline;
        for (std::size_t k = 0; k < outcomes.size(); ++k) {
          if (suite.at("runs")[k].value("baseline", false)) baseline[outcomes[k].report.command] = outcomes[k].report.wall_seconds;
        }
        int code = kExitOk;
        Sink sink(bench_output, out);
        for (auto& o : outcomes) {
          const auto base = baseline.find(o.report.command);
          if (base != baseline.end() && o.report.wall_seconds > 0.0) o.report.speedup = base->second / o.report.wall_seconds;
          o.report.parameters["dataset"] = dataset;
          sink.get() << to_json_line(o.report) << "\n";
          if (o.verify_failed) {
            err << "verification failed in run '" << o.report.name << "': " << o.failure << "\n";
            code = kExitVerifyFailed;
          }
        }
        sink.close(bench_output);
        return code;
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const VisitError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace sfcloops::cli
