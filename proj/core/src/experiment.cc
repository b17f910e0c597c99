/* Copyright 2026 The NetReduce Simulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "netreduce/experiment.h"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace netreduce {
namespace {

absl::Status BadValue(absl::string_view key, absl::string_view value,
                      absl::string_view want) {
  return absl::InvalidArgumentError(
      absl::StrFormat("config key '%s': '%s' is not %s", key, value, want));
}

absl::Status ParseDouble(absl::string_view key, absl::string_view v,
                         double& out) {
  if (!absl::SimpleAtod(v, &out) || !std::isfinite(out)) {
    return BadValue(key, v, "a finite number");
  }
  return absl::OkStatus();
}

template <typename Int>
absl::Status ParseInt(absl::string_view key, absl::string_view v, Int& out) {
  int64_t wide = 0;
  if (!absl::SimpleAtoi(v, &wide)) {
    double d = 0;
    if (!absl::SimpleAtod(v, &d) || d != std::floor(d) ||
        std::abs(d) > 9.0e15) {
      return BadValue(key, v, "an integer");
    }
    wide = static_cast<int64_t>(d);
  }
  if (wide < static_cast<int64_t>(std::numeric_limits<Int>::min()) ||
      (wide > 0 && static_cast<uint64_t>(wide) >
                       static_cast<uint64_t>(std::numeric_limits<Int>::max()))) {
    return BadValue(key, v, "in range");
  }
  out = static_cast<Int>(wide);
  return absl::OkStatus();
}

absl::Status ParseBool(absl::string_view key, absl::string_view v, bool& out) {
  if (!absl::SimpleAtob(v, &out)) return BadValue(key, v, "a boolean");
  return absl::OkStatus();
}

bool IsIntegerAxis(SweepAxis a) {
  return a == SweepAxis::kGpus || a == SweepAxis::kGpusPerMachine;
}

double AxisValue(const ExperimentConfig& c) {
  switch (c.sweep_axis) {
    case SweepAxis::kGpus:
      return static_cast<double>(c.gpus);
    case SweepAxis::kAlpha:
      return c.alpha;
    case SweepAxis::kGpusPerMachine:
      return static_cast<double>(c.gpus_per_machine);
    case SweepAxis::kBwIntra:
      return c.bw_intra;
    case SweepAxis::kNone:
    case SweepAxis::kTensorBytes:
      break;
  }
  return c.tensor_bytes;
}

ExperimentConfig WithAxis(const ExperimentConfig& c, double value) {
  ExperimentConfig out = c;
  switch (c.sweep_axis) {
    case SweepAxis::kNone:
      break;
    case SweepAxis::kTensorBytes:
      out.tensor_bytes = value;
      break;
    case SweepAxis::kGpus:
      out.gpus = static_cast<int64_t>(std::llround(value));
      break;
    case SweepAxis::kAlpha:
      out.alpha = value;
      break;
    case SweepAxis::kGpusPerMachine:
      out.gpus_per_machine = static_cast<int64_t>(std::llround(value));
      break;
    case SweepAxis::kBwIntra:
      out.bw_intra = value;
      break;
  }
  return out;
}

std::string Num(double v) { return absl::StrFormat("%.10g", v); }

std::string SimLabel(const SimConfig& s) {
  return absl::StrFormat("H=%d n=%d M=%d", s.hosts, s.rings, s.tensor_bytes);
}

}  // namespace

absl::Status ApplySetting(ExperimentConfig& c, absl::string_view key,
                          absl::string_view value) {
  key = absl::StripAsciiWhitespace(key);
  value = absl::StripAsciiWhitespace(value);
  if (key == "mode") {
    if (value == "model") {
      c.mode = ExperimentMode::kModel;
    } else if (value == "simulate") {
      c.mode = ExperimentMode::kSimulate;
    } else if (value == "sweep") {
      c.mode = ExperimentMode::kSweep;
    } else if (value == "validate") {
      c.mode = ExperimentMode::kValidate;
    } else {
      return BadValue(key, value, "one of model|simulate|sweep|validate");
    }
    return absl::OkStatus();
  }
  if (key == "topology") {
    if (value == "single-switch") {
      c.topology = Topology::kSingleSwitch;
    } else if (value == "spine-leaf") {
      c.topology = Topology::kSpineLeaf;
    } else {
      return BadValue(key, value, "single-switch or spine-leaf");
    }
    return absl::OkStatus();
  }
  if (key == "P") return ParseInt(key, value, c.gpus);
  if (key == "n") return ParseInt(key, value, c.gpus_per_machine);
  if (key == "M") return ParseDouble(key, value, c.tensor_bytes);
  if (key == "alpha") return ParseDouble(key, value, c.alpha);
  if (key == "B") return ParseDouble(key, value, c.bandwidth);
  if (key == "B_intra") return ParseDouble(key, value, c.bw_intra);
  if (key == "B_inter") return ParseDouble(key, value, c.bw_inter);
  if (key == "window" || key == "N") return ParseInt(key, value, c.window);
  if (key == "msg_len") return ParseInt(key, value, c.msg_len);
  if (key == "pkt_size") return ParseInt(key, value, c.pkt_size);
  if (key == "pmtu") return ParseInt(key, value, c.pmtu);
  if (key == "loss_rate") return ParseDouble(key, value, c.loss_rate);
  if (key == "seed") return ParseInt(key, value, c.seed);
  if (key == "propagation") return ParseDouble(key, value, c.propagation);
  if (key == "accel_latency") return ParseDouble(key, value, c.accel_latency);
  if (key == "link_bandwidth") {
    return ParseDouble(key, value, c.link_bandwidth);
  }
  if (key == "leaves") return ParseInt(key, value, c.leaves);
  if (key == "fraction_bits") return ParseInt(key, value, c.fraction_bits);
  if (key == "base_psn") return ParseInt(key, value, c.base_psn);
  if (key == "event_cap") return ParseInt(key, value, c.event_cap);
  if (key == "trace") return ParseBool(key, value, c.trace);
  if (key == "tolerance") return ParseDouble(key, value, c.tolerance);
  if (key == "threads") return ParseInt(key, value, c.threads);
  if (key == "out") {
    c.out = std::string(value);
    return absl::OkStatus();
  }
  if (key == "sweep.axis") {
    if (value == "none" || value.empty()) {
      c.sweep_axis = SweepAxis::kNone;
    } else if (value == "M") {
      c.sweep_axis = SweepAxis::kTensorBytes;
    } else if (value == "P") {
      c.sweep_axis = SweepAxis::kGpus;
    } else if (value == "alpha") {
      c.sweep_axis = SweepAxis::kAlpha;
    } else if (value == "n") {
      c.sweep_axis = SweepAxis::kGpusPerMachine;
    } else if (value == "B_intra") {
      c.sweep_axis = SweepAxis::kBwIntra;
    } else {
      return BadValue(key, value, "one of M|P|alpha|n|B_intra|none");
    }
    return absl::OkStatus();
  }
  if (key == "sweep.values") {
    c.sweep_values.clear();
    for (absl::string_view item :
         absl::StrSplit(value, ',', absl::SkipWhitespace())) {
      double v = 0;
      if (auto s = ParseDouble(key, absl::StripAsciiWhitespace(item), v);
          !s.ok()) {
        return s;
      }
      c.sweep_values.push_back(v);
    }
    return absl::OkStatus();
  }
  if (key == "sweep.start" || key == "sweep.stop") {
    double v = 0;
    if (auto s = ParseDouble(key, value, v); !s.ok()) return s;
    (key == "sweep.start" ? c.sweep_start : c.sweep_stop) = v;
    return absl::OkStatus();
  }
  if (key == "sweep.count") return ParseInt(key, value, c.sweep_count);
  if (key == "sweep.scale") {
    if (value == "linear") {
      c.sweep_scale = SweepScale::kLinear;
    } else if (value == "log") {
      c.sweep_scale = SweepScale::kLog;
    } else if (value == "pow2") {
      c.sweep_scale = SweepScale::kPow2;
    } else {
      return BadValue(key, value, "one of linear|log|pow2");
    }
    return absl::OkStatus();
  }
  return absl::InvalidArgumentError(
      absl::StrFormat("unknown config key '%s'", key));
}

absl::Status ParseConfigText(ExperimentConfig& c, absl::string_view text) {
  int line_no = 0;
  for (absl::string_view line : absl::StrSplit(text, '\n')) {
    ++line_no;
    if (size_t hash = line.find('#'); hash != absl::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "line %d: expected 'key = value', got '%s'", line_no, line));
    }
    if (auto s = ApplySetting(c, line.substr(0, eq), line.substr(eq + 1));
        !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrFormat("line %d: %s", line_no, s.message()));
    }
  }
  return absl::OkStatus();
}

absl::Status LoadConfigFile(ExperimentConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open config ", path));
  }
  std::stringstream buf;
  buf << in.rdbuf();
  if (auto s = ParseConfigText(c, buf.str()); !s.ok()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": ", s.message()));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> SweepPoints(const ExperimentConfig& c) {
  std::vector<double> pts;
  if (c.sweep_axis == SweepAxis::kNone) {
    pts.push_back(c.tensor_bytes);
    return pts;
  }
  if (!c.sweep_values.empty()) {
    pts = c.sweep_values;
  } else {
    if (!c.sweep_start.has_value() || !c.sweep_stop.has_value()) {
      return absl::InvalidArgumentError(
          "sweep needs sweep.values or sweep.start and sweep.stop");
    }
    const double a = *c.sweep_start;
    const double b = *c.sweep_stop;
    switch (c.sweep_scale) {
      case SweepScale::kPow2:
        if (!(a > 0) || !(b >= a)) {
          return absl::InvalidArgumentError(
              "pow2 sweep needs 0 < sweep.start <= sweep.stop");
        }
        for (double v = a; v <= b * (1 + 1e-12); v *= 2) pts.push_back(v);
        break;
      case SweepScale::kLinear:
      case SweepScale::kLog:
        if (c.sweep_count < 1) {
          return absl::InvalidArgumentError("sweep.count must be >= 1");
        }
        if (c.sweep_scale == SweepScale::kLog && (!(a > 0) || !(b > 0))) {
          return absl::InvalidArgumentError(
              "log sweep needs positive start and stop");
        }
        for (int i = 0; i < c.sweep_count; ++i) {
          const double t =
              c.sweep_count == 1 ? 0.0 : double(i) / (c.sweep_count - 1);
          pts.push_back(c.sweep_scale == SweepScale::kLinear
                            ? a + t * (b - a)
                            : a * std::pow(b / a, t));
        }
        break;
    }
  }
  if (pts.empty()) return absl::InvalidArgumentError("sweep range is empty");
  if (pts.size() > 1) {
    const bool up = pts[1] > pts[0];
    for (size_t i = 1; i < pts.size(); ++i) {
      if (up ? !(pts[i] > pts[i - 1]) : !(pts[i] < pts[i - 1])) {
        return absl::InvalidArgumentError(
            "sweep values must be strictly monotone");
      }
    }
  }
  if (IsIntegerAxis(c.sweep_axis)) {
    for (double v : pts) {
      if (v != std::floor(v) || v < 1) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "sweep value %g is not a positive integer", v));
      }
    }
  }
  return pts;
}

CostParams CostParamsAt(const ExperimentConfig& base, double value) {
  const ExperimentConfig c = WithAxis(base, value);
  CostParams p;
  p.gpus = c.gpus;
  p.gpus_per_machine = c.gpus_per_machine;
  p.tensor_bytes = c.tensor_bytes;
  p.bandwidth = c.bandwidth;
  p.bw_intra = c.bw_intra;
  p.bw_inter = c.bw_inter;
  p.alpha = c.alpha;
  return p;
}

SimConfig SimConfigAt(const ExperimentConfig& base, double value) {
  const ExperimentConfig c = WithAxis(base, value);
  SimConfig s;
  s.topology = c.topology;
  s.rings = static_cast<int>(std::max<int64_t>(c.gpus_per_machine, 1));
  s.hosts = static_cast<int>(c.gpus / std::max<int64_t>(c.gpus_per_machine, 1));
  s.leaves = c.leaves;
  s.window = c.window;
  const uint64_t unit = kWordBytes * static_cast<uint64_t>(s.rings);
  s.tensor_bytes =
      static_cast<uint64_t>(std::max(c.tensor_bytes, 0.0)) / unit * unit;
  s.msg_packets = c.msg_len;
  s.pmtu_bytes = c.pmtu;
  s.link_bandwidth = c.link_bandwidth > 0 ? c.link_bandwidth : c.bw_inter;
  s.propagation = c.propagation;
  s.accel_latency = c.accel_latency;
  s.loss_rate = c.loss_rate;
  s.seed = c.seed;
  s.fraction_bits = c.fraction_bits;
  s.base_psn = c.base_psn;
  s.event_cap = c.event_cap;
  s.trace = c.trace;
  return s;
}

absl::Status ValidateExperimentConfig(const ExperimentConfig& c) {
  if (c.window < 1) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "window N must be >= 1, got %d", c.window));
  }
  if (c.msg_len < 1 || c.msg_len > 0xFFFF) {
    return absl::InvalidArgumentError(
        absl::StrFormat("msg_len must be in [1, 65535], got %d", c.msg_len));
  }
  if (c.pkt_size < 1) {
    return absl::InvalidArgumentError("pkt_size must be >= 1");
  }
  if (c.pmtu < 4 || c.pmtu % 4 != 0) {
    return absl::InvalidArgumentError(
        absl::StrFormat("pmtu must be a positive multiple of 4, got %d",
                        c.pmtu));
  }
  if (!(c.tolerance > 0)) {
    return absl::InvalidArgumentError("tolerance must be positive");
  }
  if (!(c.loss_rate >= 0) || !(c.loss_rate < 1)) {
    return absl::InvalidArgumentError("loss_rate must be in [0, 1)");
  }
  if (!(c.bandwidth > 0)) {
    return absl::InvalidArgumentError("B must be positive");
  }
  if (c.threads < 0) {
    return absl::InvalidArgumentError("threads must be >= 0");
  }
  auto points = SweepPoints(c);
  if (!points.ok()) return points.status();
  for (double v : *points) {
    if (auto s = ValidateCostParams(CostParamsAt(c, v)); !s.ok()) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "at sweep value %g: %s", v, s.message()));
    }
    if (c.mode != ExperimentMode::kModel) {
      if (auto s = ValidateSimConfig(SimConfigAt(c, v)); !s.ok()) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "at sweep value %g: %s", v, s.message()));
      }
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::string> ModelRow(const CostParams& p, double sweep_value,
                                     std::optional<double> sim_time) {
  auto flat = FlatRingTime(p);
  if (!flat.ok()) return flat.status();
  auto hier = HierarchicalNetReduceTime(p);
  if (!hier.ok()) return hier.status();
  auto dfr = DeltaFrNh(p);
  if (!dfr.ok()) return dfr.status();
  auto cross = CrossoverTensorSize(p);
  if (!cross.ok()) return cross.status();
  std::string tencent, dtr;
  if (std::has_single_bit(static_cast<uint64_t>(p.gpus_per_machine))) {
    auto t = TencentTime(p);
    if (!t.ok()) return t.status();
    auto d = DeltaTrNh(p);
    if (!d.ok()) return d.status();
    tencent = Num(*t);
    dtr = Num(*d);
  }
  return absl::StrCat(Num(sweep_value), ",", Num(*flat), ",", tencent, ",",
                      Num(*hier), ",", Num(*dfr), ",", dtr, ",",
                      cross->has_value() ? Num(**cross) : "none", ",",
                      sim_time.has_value() ? Num(*sim_time) : "");
}

absl::StatusOr<ExperimentResult> RunModel(const ExperimentConfig& c) {
  if (auto s = ValidateExperimentConfig(c); !s.ok()) return s;
  auto points = SweepPoints(c);
  if (!points.ok()) return points.status();
  ExperimentResult r;
  r.csv = absl::StrCat(kModelCsvHeader, "\n");
  for (double v : *points) {
    auto row = ModelRow(CostParamsAt(c, v), v, std::nullopt);
    if (!row.ok()) return row.status();
    absl::StrAppend(&r.csv, *row, "\n");
  }
  return r;
}

absl::StatusOr<ExperimentResult> RunSweep(const ExperimentConfig& c) {
  if (auto s = ValidateExperimentConfig(c); !s.ok()) return s;
  auto points_or = SweepPoints(c);
  if (!points_or.ok()) return points_or.status();
  const std::vector<double>& points = *points_or;

  std::vector<absl::StatusOr<std::string>> rows(
      points.size(), absl::UnknownError("not run"));
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next++; i < points.size(); i = next++) {
      const SimConfig sc = SimConfigAt(c, points[i]);
      auto sim = Simulation::Create(sc);
      if (!sim.ok()) {
        rows[i] = sim.status();
        continue;
      }
      if (auto s = (*sim)->Run(); !s.ok()) {
        rows[i] = absl::Status(s.code(), absl::StrCat(SimLabel(sc), ": ",
                                                     s.message()));
        continue;
      }
      rows[i] = ModelRow(CostParamsAt(c, points[i]), points[i],
                         (*sim)->report().completion_s);
    }
  };
  size_t threads = c.threads > 0 ? static_cast<size_t>(c.threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, points.size());
  std::vector<std::thread> pool;
  for (size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();

  ExperimentResult r;
  r.csv = absl::StrCat(kModelCsvHeader, "\n");
  for (auto& row : rows) {
    if (!row.ok()) return row.status();
    absl::StrAppend(&r.csv, *row, "\n");
  }
  return r;
}

absl::StatusOr<ExperimentResult> RunSimulate(const ExperimentConfig& c) {
  if (auto s = ValidateExperimentConfig(c); !s.ok()) return s;
  const SimConfig sc = SimConfigAt(c, AxisValue(c));
  auto sim = Simulation::Create(sc);
  if (!sim.ok()) return sim.status();
  if (auto s = (*sim)->Run(); !s.ok()) return s;
  ExperimentResult r;
  r.csv = SimReportToCsv((*sim)->report());
  if (c.trace) {
    r.side_outputs.emplace_back("events.csv",
                                HostEventsToCsv((*sim)->event_log()));
    r.side_outputs.emplace_back("accel.csv",
                                AcceleratorTraceToCsv((*sim)->accel_trace()));
  }
  return r;
}

double PayloadGoodput(double link_bandwidth, int pmtu) {
  return link_bandwidth * pmtu / (pmtu + kTransportHeaderBytes);
}

SumCheck CheckExactSums(const Simulation& sim) {
  SumCheck check;
  const SimConfig& c = sim.config();
  for (int r = 0; r < c.rings; ++r) {
    const size_t words = sim.words_per_ring();
    std::vector<int64_t> sum(words, 0);
    for (int h = 0; h < c.hosts; ++h) {
      const auto& in = sim.HostInput(h, r);
      for (size_t i = 0; i < words; ++i) sum[i] += in[i].raw;
    }
    for (int h = 0; h < c.hosts; ++h) {
      const auto& out = sim.HostResult(h, r);
      for (size_t i = 0; i < words; ++i) {
        const int64_t want =
            std::clamp<int64_t>(sum[i], kFixedMin.raw, kFixedMax.raw);
        ++check.words;
        if (out[i].raw != want) ++check.mismatches;
      }
    }
  }
  return check;
}

absl::StatusOr<ExperimentResult> RunValidate(const ExperimentConfig& c) {
  if (auto s = ValidateExperimentConfig(c); !s.ok()) return s;
  const SimConfig sc = SimConfigAt(c, AxisValue(c));
  auto sim = Simulation::Create(sc);
  if (!sim.ok()) return sim.status();
  if (auto s = (*sim)->Run(); !s.ok()) return s;
  const SimReport& rep = (*sim)->report();
  const SumCheck sums = CheckExactSums(**sim);

  ExperimentResult r;
  r.csv = "check,value\n";
  auto row = [&](absl::string_view k, const std::string& v) {
    absl::StrAppend(&r.csv, k, ",", v, "\n");
  };
  bool pass = sums.mismatches == 0 &&
              rep.accelerator.exactly_once_violations == 0 &&
              rep.stash_residual == 0;

  const bool timed =
      sc.topology == Topology::kSingleSwitch && sc.loss_rate == 0.0;
  if (timed) {
    // Per-message overhead measured from a one-message-per-ring run.
    SimConfig one = sc;
    const uint64_t msg_bytes =
        static_cast<uint64_t>(sc.msg_packets) * sc.pmtu_bytes;
    one.tensor_bytes =
        std::min<uint64_t>(sc.tensor_bytes, msg_bytes * sc.rings);
    auto probe = Simulation::Create(one);
    if (!probe.ok()) return probe.status();
    if (auto s = (*probe)->Run(); !s.ok()) return s;
    const double goodput = PayloadGoodput(sc.link_bandwidth, sc.pmtu_bytes);
    const double alpha =
        (*probe)->report().completion_s - one.tensor_bytes / goodput;
    const double model = alpha + sc.tensor_bytes / goodput;
    const double err = std::abs(rep.completion_s - model) / model;
    pass = pass && err <= c.tolerance;
    row("t_sim_s", Num(rep.completion_s));
    row("t_model_s", Num(model));
    row("alpha_calibrated_s", Num(alpha));
    row("goodput_bytes_per_s", Num(goodput));
    row("rel_error", Num(err));
    row("tolerance", Num(c.tolerance));
    row("timing", "checked");
  } else {
    row("t_sim_s", Num(rep.completion_s));
    row("timing", "skipped");
  }
  row("sum_words", absl::StrCat(sums.words));
  row("sum_mismatches", absl::StrCat(sums.mismatches));
  row("exactly_once_violations",
      absl::StrCat(rep.accelerator.exactly_once_violations));
  row("live_clear_violations",
      absl::StrCat(rep.accelerator.live_clear_violations));
  row("stash_residual", absl::StrCat(rep.stash_residual));
  row("retransmissions", absl::StrCat(rep.retransmissions));
  row("result", pass ? "pass" : "fail");
  r.pass = pass;
  return r;
}

absl::StatusOr<ExperimentResult> RunExperiment(const ExperimentConfig& c) {
  switch (c.mode) {
    case ExperimentMode::kModel:
      return RunModel(c);
    case ExperimentMode::kSweep:
      return RunSweep(c);
    case ExperimentMode::kSimulate:
      return RunSimulate(c);
    case ExperimentMode::kValidate:
      return RunValidate(c);
  }
  return absl::InvalidArgumentError("unknown mode");
}

}  // namespace netreduce
