#include "ts/sim/sim.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "ts/core/error.h"

namespace ts::sim {

namespace {

constexpr double eps = 1e-9;

int round_to_tick(int v, int tick) {
  return std::max(tick, static_cast<int>(std::lround(static_cast<double>(v) /
                                                     tick)) * tick);
}

double ceil_to_tick(double v, int tick) {
  return std::ceil(v / tick - eps) * tick;
}

// Integer split of `total` proportional to `w`, preserving the sum.
std::vector<int> largest_remainder(int total, std::vector<double> const& w) {
  auto const sum = std::accumulate(begin(w), end(w), 0.0);
  std::vector<int> out(w.size(), 0);
  if (total <= 0 || !(sum > 0.0)) {
    return out;
  }
  std::vector<std::pair<double, std::size_t>> rem;
  auto given = 0;
  for (auto i = std::size_t{0}; i != w.size(); ++i) {
    auto const exact = total * w[i] / sum;
    out[i] = static_cast<int>(std::floor(exact + eps));
    given += out[i];
    rem.emplace_back(exact - out[i], i);
  }
  std::stable_sort(begin(rem), end(rem),
                   [](auto const& a, auto const& b) { return a.first > b.first; });
  for (auto i = std::size_t{0}; given < total && i != rem.size(); ++i) {
    ++out[rem[i].second];
    ++given;
  }
  return out;
}

}  // namespace

demand_table demand_table::zeros(std::size_t n_stations, int n_bins,
                                 time_bin first_bin) {
  demand_table d;
  d.first_bin = first_bin;
  d.bin_s = first_bin.bin_minutes * 60;
  d.flows.assign(static_cast<std::size_t>(n_bins),
                 std::vector<std::vector<double>>(
                     n_stations, std::vector<double>(n_stations, 0.0)));
  return d;
}

int platform_state::waiting() const {
  auto n = 0;
  for (auto const& g : queue) {
    n += g.count;
  }
  return n;
}

int train_state::load() const {
  return std::accumulate(begin(load_by_dest), end(load_by_dest), 0);
}

line_topology rounded_topology(line_topology const& topo, int tick_s) {
  if (tick_s <= 0) {
    throw config_error{"tick_s must be positive"};
  }
  auto out = topo;
  for (auto& s : out.stations) {
    s.dwell_s = round_to_tick(s.dwell_s, tick_s);
  }
  for (auto& r : out.run_s) {
    r = round_to_tick(r, tick_s);
  }
  return out;
}

std::vector<train_state> init_trains(
    line_topology const& topo, int horizon_s,
    std::vector<ingest::train_position_report> const& reports,
    instant sim_start, std::vector<std::vector<double>> const& dest_weights,
    int tick_s) {
  auto const n = topo.size();
  std::vector<train_state> trains;
  if (reports.empty()) {
    auto k = 0;
    for (auto t = 0; t < horizon_s; t += topo.headway_s) {
      trains.push_back(train_state{"T" + std::to_string(k++), 0,
                                   train_phase::pending,
                                   ceil_to_tick(t, tick_s),
                                   std::vector<int>(n, 0), topo.capacity});
    }
    return trains;
  }

  auto sorted = reports;
  std::stable_sort(begin(sorted), end(sorted), [](auto const& a, auto const& b) {
    return a.train_id < b.train_id;
  });
  for (auto const& r : sorted) {
    auto const i = topo.index_of(r.last_station);
    if (!i) {
      throw config_error{"position report for unknown station " +
                         r.last_station};
    }
    if (*i + 1 >= n) {
      continue;  // at the terminal: out of service
    }
    auto const age =
        sim_start > r.timestamp
            ? static_cast<double>((sim_start - r.timestamp).count())
            : 0.0;
    auto const remaining =
        std::max(0.0, topo.run_s[*i] - (r.offset_s + age));

    train_state t{r.train_id, *i, train_phase::running,
                  ceil_to_tick(remaining, tick_s), std::vector<int>(n, 0),
                  topo.capacity};
    if (r.load_estimate && *r.load_estimate > 0) {
      std::vector<double> w(n, 0.0);
      auto any = false;
      for (auto d = *i + 1; d != n; ++d) {
        w[d] = *i < dest_weights.size() && d < dest_weights[*i].size()
                   ? dest_weights[*i][d]
                   : 0.0;
        any |= w[d] > 0.0;
      }
      if (!any) {
        for (auto d = *i + 1; d != n; ++d) {
          w[d] = 1.0;
        }
      }
      t.load_by_dest = largest_remainder(
          std::min(*r.load_estimate, topo.capacity), w);
    }
    trains.push_back(std::move(t));
  }
  return trains;
}

boarding_outcome board_alight(train_state train, platform_state platform) {
  boarding_outcome out;
  auto& slot = train.load_by_dest[platform.station];
  out.alighted = slot;
  slot = 0;

  auto residual = train.capacity - train.load();
  while (residual > 0 && !platform.queue.empty()) {
    auto& g = platform.queue.front();
    auto const n = std::min(g.count, residual);
    train.load_by_dest[g.destination] += n;
    g.count -= n;
    residual -= n;
    out.boarded += n;
    out.boarded_groups.emplace_back(g.id, n);
    if (g.count == 0) {
      platform.queue.pop_front();
    }
  }
  out.denied = platform.waiting();
  out.train = std::move(train);
  out.platform = std::move(platform);
  return out;
}

demand_table demand_from_od(std::vector<od::od_forecast> const& forecasts,
                            line_topology const& topo, time_bin first_bin,
                            int n_bins) {
  auto d = demand_table::zeros(topo.size(), n_bins, first_bin);
  auto const start = bin_start(first_bin);
  for (auto const& f : forecasts) {
    if (!f.target_bin) {
      throw config_error{"demand_from_od: forecast without target bin"};
    }
    auto const offset = static_cast<int>(
        (bin_start(*f.target_bin) - start).count() / d.bin_s);
    if (offset < 0 || offset >= n_bins) {
      continue;
    }
    auto const o = topo.require_index(f.origin);
    for (auto const& [dest, flow] : f.flows) {
      d.flows[static_cast<std::size_t>(offset)][o][topo.require_index(dest)] +=
          flow;
    }
  }
  return d;
}

namespace {

struct sampled_arrival {
  double time_s;
  std::size_t origin;
  std::size_t destination;
};

class simulator {
public:
  simulator(sim_config const& cfg, demand_table const& demand,
            std::vector<train_state> const& trains)
      : cfg_{cfg},
        topo_{rounded_topology(cfg.topology, cfg.tick_s)},
        demand_{demand},
        trains_{trains},
        n_{topo_.size()},
        rng_{cfg.seed} {
    topo_.validate();
    if (cfg.horizon_s <= 0) {
      throw config_error{"horizon_s must be positive"};
    }
    if (static_cast<long>(demand.n_bins()) * demand.bin_s < cfg.horizon_s) {
      throw config_error{"simulation horizon exceeds the demand inputs"};
    }
    for (auto const& bin : demand.flows) {
      if (bin.size() != n_) {
        throw config_error{"demand table does not match topology"};
      }
      for (auto const& row : bin) {
        if (row.size() != n_) {
          throw config_error{"demand table does not match topology"};
        }
        for (auto const f : row) {
          if (!(f >= 0.0)) {
            throw config_error{"negative demand"};
          }
        }
      }
    }
    if (cfg.closure) {
      auto const& c = *cfg.closure;
      if (c.station >= n_ || c.end_s < c.start_s || c.divert_fraction < 0.0 ||
          c.divert_fraction > 1.0) {
        throw config_error{"invalid gate closure"};
      }
      if (c.handling == closure_handling::divert &&
          (!c.divert_to || *c.divert_to >= n_)) {
        throw config_error{"gate closure diversion needs an adjacent station"};
      }
    }

    n_bins_ = static_cast<int>((cfg.horizon_s + demand.bin_s - 1) / demand.bin_s);
    result_.first_bin = demand.first_bin;
    result_.bin_s = demand.bin_s;
    result_.n_bins = n_bins_;
    for (auto const& s : topo_.stations) {
      result_.stations.push_back(s.id);
    }
    result_.platforms.assign(
        n_, std::vector<platform_bin>(static_cast<std::size_t>(n_bins_)));
    waiting_sum_.assign(n_, std::vector<double>(static_cast<std::size_t>(n_bins_)));
    ticks_in_bin_.assign(static_cast<std::size_t>(n_bins_), 0);
    for (auto i = std::size_t{0}; i != n_; ++i) {
      platforms_.push_back(platform_state{i, {}});
    }
    acc_.assign(n_, std::vector<double>(n_, 0.0));
    if (cfg.record_trace) {
      result_.trace.emplace();
    }

    for (auto& t : trains_) {
      if (t.load_by_dest.size() != n_ || t.station >= n_) {
        throw config_error{"train state does not match topology"};
      }
      t.capacity = t.capacity > 0 ? t.capacity : topo_.capacity;
      t.event_s = ceil_to_tick(t.event_s, cfg.tick_s);
      for (auto d = std::size_t{0}; d != n_; ++d) {
        auto const served = t.phase == train_phase::running ? d > t.station
                                                            : d >= t.station;
        if (t.load_by_dest[d] < 0 || (t.load_by_dest[d] > 0 && !served)) {
          throw config_error{"train " + t.train_id + " carries unservable load"};
        }
      }
      if (t.load() > t.capacity) {
        throw config_error{"train " + t.train_id + " exceeds capacity"};
      }
      result_.totals.initial_onboard += t.load();
      if (result_.trace) {
        result_.trace->train_ids.push_back(t.train_id);
        result_.trace->capacities.push_back(t.capacity);
      }
    }
  }

  sim_result run() {
    auto const ticks = (cfg_.horizon_s + cfg_.tick_s - 1) / cfg_.tick_s;
    auto current_bin = -1;
    for (auto k = 0; k != ticks; ++k) {
      auto const t = static_cast<double>(k) * cfg_.tick_s;
      bin_ = std::min(static_cast<int>(t / demand_.bin_s), n_bins_ - 1);
      if (bin_ != current_bin) {
        current_bin = bin_;
        for (auto s = std::size_t{0}; s != n_; ++s) {
          cell(s).queue_start = platforms_[s].waiting();
        }
        start_bin(t);
      }
      advance_trains(t);
      release_deferred(t);
      generate_arrivals(t);
      for (auto s = std::size_t{0}; s != n_; ++s) {
        auto const w = platforms_[s].waiting();
        waiting_sum_[s][static_cast<std::size_t>(bin_)] += w;
        cell(s).waiting_max = std::max(cell(s).waiting_max, w);
      }
      ++ticks_in_bin_[static_cast<std::size_t>(bin_)];
      if (cfg_.audit) {
        audit();
      }
    }

    for (auto s = std::size_t{0}; s != n_; ++s) {
      for (auto b = std::size_t{0}; b != static_cast<std::size_t>(n_bins_); ++b) {
        if (ticks_in_bin_[b] > 0) {
          result_.platforms[s][b].waiting_avg = waiting_sum_[s][b] / ticks_in_bin_[b];
        }
      }
    }
    auto& tot = result_.totals;
    tot.onboard = onboard();
    tot.waiting = waiting();
    for (auto const& g : held_) {
      tot.deferred_remaining += g.count;
    }
    return std::move(result_);
  }

private:
  platform_bin& cell(std::size_t s) {
    return result_.platforms[s][static_cast<std::size_t>(bin_)];
  }

  long onboard() const {
    auto sum = 0L;
    for (auto const& t : trains_) {
      sum += t.load();
    }
    return sum;
  }

  long waiting() const {
    auto sum = 0L;
    for (auto const& p : platforms_) {
      sum += p.waiting();
    }
    return sum;
  }

  void audit() const {
    auto const& tot = result_.totals;
    if (tot.generated + tot.initial_onboard !=
        onboard() + tot.alighted + waiting()) {
      throw std::logic_error{"simulation conservation violated"};
    }
    for (auto const& t : trains_) {
      if (t.load() > t.capacity) {
        throw std::logic_error{"train " + t.train_id + " over capacity"};
      }
    }
  }

  void start_bin(double t) {
    auto const& flows = demand_.flows[static_cast<std::size_t>(bin_)];
    for (auto o = std::size_t{0}; o != n_; ++o) {
      for (auto d = std::size_t{0}; d <= o; ++d) {
        result_.totals.out_of_direction += flows[o][d];
      }
    }
    if (cfg_.mode != arrival_mode::poisson_sample) {
      return;
    }
    sampled_.clear();
    next_sampled_ = 0;
    std::uniform_real_distribution<double> unit{0.0, 1.0};
    for (auto o = std::size_t{0}; o != n_; ++o) {
      for (auto d = o + 1; d < n_; ++d) {
        auto const rate = flows[o][d];
        if (rate <= 0.0) {
          continue;
        }
        auto const count = std::poisson_distribution<int>{rate}(rng_);
        for (auto i = 0; i != count; ++i) {
          sampled_.push_back({t + unit(rng_) * demand_.bin_s, o, d});
        }
      }
    }
    std::stable_sort(begin(sampled_), end(sampled_),
                     [](auto const& a, auto const& b) { return a.time_s < b.time_s; });
  }

  void join(std::size_t station, std::size_t dest, int count, double at) {
    auto const id = next_group_++;
    platforms_[station].queue.push_back(passenger_group{id, dest, count, at, -1});
    result_.totals.generated += count;
    cell(station).arrivals += count;
    if (result_.trace) {
      result_.trace->arrivals.push_back({station, id, dest, count, at});
    }
  }

  void emit(std::size_t o, std::size_t d, int count, double at) {
    if (cfg_.closure && cfg_.closure->station == o &&
        at >= cfg_.closure->start_s && at < cfg_.closure->end_s) {
      auto const& c = *cfg_.closure;
      auto& tot = result_.totals;
      tot.intercepted += count;
      switch (c.handling) {
        case closure_handling::drop: tot.dropped += count; return;
        case closure_handling::divert: {
          divert_acc_ += count * c.divert_fraction;
          auto const moved = std::min(
              count, static_cast<int>(std::floor(divert_acc_ + eps)));
          divert_acc_ -= moved;
          if (moved > 0) {
            tot.diverted += moved;
            if (d > *c.divert_to) {
              join(*c.divert_to, d, moved, at);
            }
            count -= moved;
          }
          break;
        }
        case closure_handling::defer: break;
      }
      if (count > 0) {
        held_.push_back(passenger_group{0, d, count, at, -1});
      }
      return;
    }
    join(o, d, count, at);
  }

  void release_deferred(double t) {
    if (!cfg_.closure || held_.empty() || t < cfg_.closure->end_s) {
      return;
    }
    for (auto const& g : held_) {
      result_.totals.released += g.count;
      join(cfg_.closure->station, g.destination, g.count, t);
    }
    held_.clear();
  }

  void generate_arrivals(double t) {
    auto const until = t + cfg_.tick_s;
    if (cfg_.mode == arrival_mode::poisson_sample) {
      while (next_sampled_ < sampled_.size() &&
             sampled_[next_sampled_].time_s < until) {
        auto const& a = sampled_[next_sampled_++];
        emit(a.origin, a.destination, 1, a.time_s);
      }
      return;
    }
    auto const& flows = demand_.flows[static_cast<std::size_t>(bin_)];
    auto const frac = static_cast<double>(cfg_.tick_s) / demand_.bin_s;
    for (auto o = std::size_t{0}; o != n_; ++o) {
      for (auto d = o + 1; d < n_; ++d) {
        if (flows[o][d] <= 0.0) {
          continue;
        }
        acc_[o][d] += flows[o][d] * frac;
        auto const whole = std::floor(acc_[o][d] + eps);
        if (whole >= 1.0) {
          acc_[o][d] = std::max(0.0, acc_[o][d] - whole);
          emit(o, d, static_cast<int>(whole), t);
        }
      }
    }
  }

  void depart(train_state& train, double t) {
    auto const s = train.station;
    auto out = board_alight(std::move(train), std::move(platforms_[s]));
    train = std::move(out.train);
    platforms_[s] = std::move(out.platform);

    auto& c = cell(s);
    result_.totals.alighted += out.alighted;
    c.boarded += out.boarded;
    if (out.denied > 0) {
      c.left_behind += out.denied;
      result_.totals.denied_events += out.denied;
      for (auto& g : platforms_[s].queue) {
        if (g.last_denied_bin != bin_) {
          g.last_denied_bin = bin_;
          c.left_behind_unique += g.count;
        }
      }
    }
    result_.train_log.push_back(train_record{train.train_id, s, t, train.load()});
    if (result_.trace) {
      result_.trace->departures.push_back(trace_departure{
          train.train_id, s, t, out.alighted, out.boarded, out.denied,
          train.load(), std::move(out.boarded_groups)});
    }
  }

  void advance_trains(double t) {
    for (auto& train : trains_) {
      while (train.phase != train_phase::done && train.event_s <= t + eps) {
        switch (train.phase) {
          case train_phase::pending:
            train.phase = train_phase::dwelling;
            train.event_s += topo_.stations[train.station].dwell_s;
            break;
          case train_phase::dwelling:
            depart(train, t);
            if (train.station + 1 >= n_) {
              train.phase = train_phase::done;
              break;
            }
            train.phase = train_phase::running;
            train.event_s += topo_.run_s[train.station];
            break;
          case train_phase::running:
            ++train.station;
            if (train.station + 1 == n_) {
              result_.totals.alighted += train.load();
              std::fill(begin(train.load_by_dest), end(train.load_by_dest), 0);
              train.phase = train_phase::done;
              break;
            }
            train.phase = train_phase::dwelling;
            train.event_s += topo_.stations[train.station].dwell_s;
            break;
          case train_phase::done: break;
        }
      }
    }
  }

  sim_config const& cfg_;
  line_topology topo_;
  demand_table const& demand_;
  std::vector<train_state> trains_;
  std::size_t n_;
  std::mt19937_64 rng_;
  int n_bins_{0};
  int bin_{0};
  sim_result result_;
  std::vector<platform_state> platforms_;
  std::vector<std::vector<double>> waiting_sum_;
  std::vector<int> ticks_in_bin_;
  std::vector<std::vector<double>> acc_;
  std::vector<sampled_arrival> sampled_;
  std::size_t next_sampled_{0};
  std::deque<passenger_group> held_;
  double divert_acc_{0.0};
  std::uint64_t next_group_{1};
};

}  // namespace

sim_result run(sim_config const& config, demand_table const& demand,
               std::vector<train_state> const& trains) {
  return simulator{config, demand, trains}.run();
}

std::vector<sim_result> run_ensemble(sim_config config,
                                     demand_table const& demand,
                                     std::vector<train_state> const& trains,
                                     int n_runs) {
  if (n_runs < 1) {
    throw config_error{"ensemble needs at least one run"};
  }
  config.mode = arrival_mode::poisson_sample;
  std::vector<sim_result> out(static_cast<std::size_t>(n_runs));
  auto const workers = std::max(1U, std::thread::hardware_concurrency());
  for (auto first = 0; first < n_runs; first += static_cast<int>(workers)) {
    std::vector<std::future<void>> batch;
    auto const last = std::min(n_runs, first + static_cast<int>(workers));
    for (auto i = first; i != last; ++i) {
      batch.push_back(std::async(std::launch::async, [&, i] {
        auto cfg = config;
        cfg.seed = config.seed + static_cast<std::uint64_t>(i);
        out[static_cast<std::size_t>(i)] = run(cfg, demand, trains);
      }));
    }
    for (auto& f : batch) {
      f.get();
    }
  }
  return out;
}

}  // namespace ts::sim
