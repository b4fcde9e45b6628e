#include "oros/milp.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <sstream>

#include "oros/energy.hpp"
#include "oros/log.hpp"

namespace oros {

int MilpModel::add_col(VarRef ref, double lb, double ub, bool integral, double obj) {
  cols.push_back(Column{ref, lb, ub, obj, integral});
  return static_cast<int>(cols.size()) - 1;
}

int MilpModel::add_row(Row row) {
  rows.push_back(std::move(row));
  return static_cast<int>(rows.size()) - 1;
}

int MilpModel::n_binary() const {
  int n = 0;
  for (const auto& c : cols)
    if (c.integral) ++n;
  return n;
}

int MilpModel::n_free_cols() const {
  int n = 0;
  for (const auto& c : cols)
    if (!c.fixed()) ++n;
  return n;
}

std::string MilpModel::col_name(int j) const {
  const VarRef& v = cols[j].ref;
  std::ostringstream os;
  switch (v.kind) {
    case VarKind::L: os << "L_r" << v.r + 1 << "_t" << v.t << "_a" << v.c.a << "_b" << v.c.b; break;
    case VarKind::E: os << "E_t" << v.t << "_a" << v.c.a << "_b" << v.c.b; break;
    case VarKind::U: os << "U_r" << v.r + 1 << "_t" << v.t; break;
    case VarKind::Bat: os << "Bat_r" << v.r + 1 << "_t" << v.t; break;
    case VarKind::Ups:
      os << "Ups_r" << v.r + 1 << "_t" << v.t << "_a" << v.c.a << "_b" << v.c.b << "_a" << v.c2.a
         << "_b" << v.c2.b;
      break;
    case VarKind::Alpha:
      os << "Alpha_r" << v.r + 1 << "_t" << v.t << "_a" << v.c.a << "_b" << v.c.b;
      break;
    case VarKind::Delta:
      os << "Delta_r" << v.r + 1 << "_t" << v.t << "_a" << v.c.a << "_b" << v.c.b;
      break;
  }
  return os.str();
}

std::string MilpModel::row_name(int i) const {
  const Row& row = rows[i];
  std::ostringstream os;
  auto rt = [&](const char* p) { os << p << "_r" << row.r + 1 << "_t" << row.t; };
  auto rtc = [&](const char* p) {
    os << p << "_r" << row.r + 1 << "_t" << row.t << "_a" << row.c.a << "_b" << row.c.b;
  };
  switch (row.kind) {
    case RowKind::Position: rt("pos"); break;
    case RowKind::Collision: os << "coll_t" << row.t << "_a" << row.c.a << "_b" << row.c.b; break;
    case RowKind::Motion: rtc("mot"); break;
    case RowKind::UpsUb1: rtc("ups1"); os << "_a" << row.c2.a << "_b" << row.c2.b; break;
    case RowKind::UpsUb2: rtc("ups2"); os << "_a" << row.c2.a << "_b" << row.c2.b; break;
    case RowKind::UpsLb: rtc("ups3"); os << "_a" << row.c2.a << "_b" << row.c2.b; break;
    case RowKind::AlphaUb1: rtc("alpha1"); break;
    case RowKind::AlphaUb2: rtc("alpha2"); break;
    case RowKind::AlphaLb: rtc("alpha3"); break;
    case RowKind::DeltaUb1: rtc("delta1"); break;
    case RowKind::DeltaUb2: rtc("delta2"); break;
    case RowKind::DeltaLb: rtc("delta3"); break;
    case RowKind::Battery: rt("bat"); break;
    case RowKind::ExploreMono: os << "emono_t" << row.t << "_a" << row.c.a << "_b" << row.c.b; break;
    case RowKind::ExploreVisit: rtc("evis"); break;
    case RowKind::ExploreCap: os << "ecap_t" << row.t << "_a" << row.c.a << "_b" << row.c.b; break;
    case RowKind::Charging: rt("chg"); break;
    case RowKind::FlowOut: rtc("fout"); break;
    case RowKind::FlowIn: rtc("fin"); break;
    case RowKind::Custom: os << "c" << i; break;
  }
  return os.str();
}

namespace {
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string MilpModel::dump_lp() const {
  std::ostringstream os;
  os << "\\ window model, " << cols.size() << " columns, " << rows.size() << " rows\n";
  os << (maximize ? "Maximize\n" : "Minimize\n") << " obj:";
  int written = 0;
  for (size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].obj == 0.0) continue;
    os << (cols[j].obj >= 0 ? " + " : " - ") << num(std::fabs(cols[j].obj)) << " " << col_name(j);
    if (++written % 6 == 0) os << "\n   ";
  }
  if (written == 0) os << " 0 " << col_name(0);
  os << "\nSubject To\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    os << " " << row_name(i) << ":";
    int k = 0;
    for (const auto& [j, a] : row.terms) {
      os << (a >= 0 ? " + " : " - ") << num(std::fabs(a)) << " " << col_name(j);
      if (++k % 6 == 0) os << "\n   ";
    }
    if (row.lo == row.hi) os << " = " << num(row.hi);
    else if (row.hi < kInf) os << " <= " << num(row.hi);
    else os << " >= " << num(row.lo);
    os << "\n";
  }
  os << "Bounds\n";
  for (size_t j = 0; j < cols.size(); ++j) {
    const Column& c = cols[j];
    if (c.fixed()) os << " " << col_name(j) << " = " << num(c.lb) << "\n";
    else os << " " << num(c.lb) << " <= " << col_name(j) << " <= " << num(c.ub) << "\n";
  }
  os << "Binaries\n";
  int k = 0;
  for (size_t j = 0; j < cols.size(); ++j) {
    if (!cols[j].integral) continue;
    os << " " << col_name(j);
    if (++k % 8 == 0) os << "\n";
  }
  os << "\nEnd\n";
  return os.str();
}

void MilpModel::check_valid() const {
  for (const auto& c : cols) {
    if (c.lb > c.ub) throw ValidationError("model: column lb > ub");
    if (c.integral && (c.lb < -1e-9 || c.ub > 1.0 + 1e-9))
      throw ValidationError("model: binary column outside [0,1]");
  }
  for (const auto& row : rows) {
    if (row.lo > row.hi) throw ValidationError("model: row lo > hi");
    for (const auto& [j, a] : row.terms) {
      if (j < 0 || j >= static_cast<int>(cols.size()))
        throw ValidationError("model: row references invalid column");
      (void)a;
    }
  }
}

VarSpace::VarSpace(const GridMap& grid, int n_robots, int window, DynamicsVariant variant,
                   bool prune_upsilon)
    : R_(n_robots), W_(window), A_(grid.width_a), B_(grid.height_b), variant_(variant) {
  // Geometric adjacency (plus stay), ignoring obstacles: the const9.4-style
  // pruning is purely positional. Unpruned mode keeps every cell pair.
  for (int b = 1; b <= B_; ++b)
    for (int a = 1; a <= A_; ++a) {
      Cell from{a, b};
      if (prune_upsilon) {
        for (int db = -1; db <= 1; ++db)
          for (int da = -1; da <= 1; ++da) {
            if (grid.adjacency == Adjacency::VonNeumann && da != 0 && db != 0) continue;
            Cell to{a + da, b + db};
            if (to.a < 1 || to.a > A_ || to.b < 1 || to.b > B_) continue;
            pairs_.emplace_back(from, to);
          }
      } else {
        for (int b2 = 1; b2 <= B_; ++b2)
          for (int a2 = 1; a2 <= A_; ++a2) pairs_.emplace_back(from, Cell{a2, b2});
      }
    }
  std::sort(pairs_.begin(), pairs_.end());
  for (size_t i = 0; i < pairs_.size(); ++i)
    pair_idx_[{cell_index(pairs_[i].first), cell_index(pairs_[i].second)}] = static_cast<int>(i);

  int cells = A_ * B_;
  l0_ = 0;
  e0_ = l0_ + R_ * (W_ + 1) * cells;
  u0_ = e0_ + (W_ + 1) * cells;
  bat0_ = u0_ + R_ * W_;
  ups0_ = bat0_ + R_ * (W_ + 1);
  int next = ups0_ + R_ * W_ * static_cast<int>(pairs_.size());
  if (variant_ == DynamicsVariant::A) {
    alpha0_ = next;
    next += R_ * W_ * cells;
  } else {
    delta0_ = next;
    next += R_ * W_ * cells;
  }
  total_ = next;
}

int VarSpace::ups(int r, int t, Cell from, Cell to) const {
  auto it = pair_idx_.find({cell_index(from), cell_index(to)});
  if (it == pair_idx_.end()) return -1;
  return ups0_ + (r * W_ + t) * static_cast<int>(pairs_.size()) + it->second;
}

ModelBuilder::ModelBuilder(const Scenario& scenario, int window, const WindowState& state,
                           BuildOptions opts)
    : scn_(scenario), grid_(scenario.grid), window_(window), state_(state), opts_(opts) {
  if (window < 0) throw ValidationError("window must be >= 0");
  if (state.positions.size() != scenario.robots.size() ||
      state.batteries.size() != scenario.robots.size())
    throw ValidationError("window state does not match scenario robots");
  for (Cell c : state.extra_obstacles) grid_.obstacles.insert(c);
  for (const auto& [c, f] : state.terrain_overrides) grid_.terrain[c] = f;
  for (size_t r = 0; r < state.positions.size(); ++r) {
    if (!grid_.free_cell(state.positions[r]))
      throw ValidationError("robot position " + cell_str(state.positions[r]) + " not free");
    if (state.batteries[r] < 0 || state.batteries[r] > scenario.robots[r].battery_capacity)
      throw ValidationError("robot battery outside [0, capacity]");
  }
  for (size_t i = 1; i < scn_.stations.size(); ++i)
    if (scn_.stations[i].charge_rate != scn_.stations[0].charge_rate)
      throw ValidationError("planner model requires a uniform station charge_rate");

  variant_ = opts.variant.value_or(scenario.mission.variant);
  explored0_ = state.explored;
  if (opts.normalize_start_explored)
    for (Cell c : state.positions) explored0_.insert(c);

  space_ = VarSpace(grid_, static_cast<int>(scenario.robots.size()), window_, variant_,
                    opts.prune_upsilon);

  const int R = space_.robots(), W = window_;
  model_.maximize = true;
  model_.cols.reserve(space_.total_cols());
  for (int r = 0; r < R; ++r)
    for (int t = 0; t <= W; ++t)
      for (int idx = 0; idx < space_.cells(); ++idx)
        model_.add_col({VarKind::L, r, t, space_.cell_at(idx)}, 0, 1, true);
  for (int t = 0; t <= W; ++t)
    for (int idx = 0; idx < space_.cells(); ++idx)
      model_.add_col({VarKind::E, -1, t, space_.cell_at(idx)}, 0, 1, !opts.relax_e);
  for (int r = 0; r < R; ++r)
    for (int t = 1; t <= W; ++t) model_.add_col({VarKind::U, r, t}, 0, 1, true);
  for (int r = 0; r < R; ++r)
    for (int t = 0; t <= W; ++t)
      model_.add_col({VarKind::Bat, r, t}, 0, scenario.robots[r].battery_capacity, false);
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < W; ++t)
      for (const auto& [from, to] : space_.pairs())
        model_.add_col({VarKind::Ups, r, t, from, to}, 0, 1, true);
  if (variant_ == DynamicsVariant::A) {
    for (int r = 0; r < R; ++r)
      for (int t = 0; t < W; ++t)
        for (int idx = 0; idx < space_.cells(); ++idx)
          model_.add_col({VarKind::Alpha, r, t, space_.cell_at(idx)}, 0, 1, true);
  } else {
    for (int r = 0; r < R; ++r)
      for (int t = 1; t <= W; ++t)
        for (int idx = 0; idx < space_.cells(); ++idx)
          model_.add_col({VarKind::Delta, r, t, space_.cell_at(idx)}, 0, 1, true);
  }
}

double ModelBuilder::move_coeff(Cell from, Cell to) const {
  int d = chebyshev(from, to);
  if (d <= 1) return p_move(scn_.energy, grid_, from, to);
  // Non-adjacent pairs only exist in unpruned models; any integral solution
  // forces them to zero, so the coefficient just needs to be finite.
  return scn_.energy.p_move_base * scn_.energy.p_move_diag_factor * d * grid_.terrain_factor(to);
}

int ModelBuilder::emit_position_constraints() {
  const int R = space_.robots(), W = window_;
  int added = 0;
  // Obstacles are never occupied; the window starts from the given positions.
  for (int r = 0; r < R; ++r) {
    for (int t = 0; t <= W; ++t)
      for (int idx = 0; idx < space_.cells(); ++idx) {
        Cell c = space_.cell_at(idx);
        if (grid_.blocked(c)) model_.cols[space_.l(r, t, c)].ub = 0;
      }
    for (int idx = 0; idx < space_.cells(); ++idx) {
      Cell c = space_.cell_at(idx);
      model_.fix(space_.l(r, 0, c), c == state_.positions[r] ? 1.0 : 0.0);
    }
  }
  for (int r = 0; r < R; ++r)
    for (int t = 1; t <= W; ++t) {
      Row row;
      row.kind = RowKind::Position;
      row.r = r;
      row.t = t;
      row.lo = row.hi = 1.0;
      for (int idx = 0; idx < space_.cells(); ++idx)
        row.terms.push_back({space_.l(r, t, space_.cell_at(idx)), 1.0});
      model_.add_row(std::move(row));
      ++added;
    }
  if (scn_.mission.collision_exclusive && R > 1) {
    for (int t = 1; t <= W; ++t)
      for (int idx = 0; idx < space_.cells(); ++idx) {
        Cell c = space_.cell_at(idx);
        Row row;
        row.kind = RowKind::Collision;
        row.t = t;
        row.c = c;
        row.hi = 1.0;
        for (int r = 0; r < R; ++r) row.terms.push_back({space_.l(r, t, c), 1.0});
        model_.add_row(std::move(row));
        ++added;
      }
  }
  return added;
}

int ModelBuilder::emit_motion_constraints() {
  const int R = space_.robots(), W = window_;
  int added = 0;
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < W; ++t)
      for (int idx = 0; idx < space_.cells(); ++idx) {
        Cell dest = space_.cell_at(idx);
        Row row;
        row.kind = RowKind::Motion;
        row.r = r;
        row.t = t + 1;
        row.c = dest;
        row.hi = 0.0;
        row.terms.push_back({space_.l(r, t + 1, dest), 1.0});
        for (Cell src : neighbors(grid_, dest)) row.terms.push_back({space_.l(r, t, src), -1.0});
        model_.add_row(std::move(row));
        ++added;
      }
  return added;
}

int ModelBuilder::emit_upsilon_linearization() {
  const int R = space_.robots(), W = window_;
  int added = 0;
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < W; ++t)
      for (const auto& [from, to] : space_.pairs()) {
        int y = space_.ups(r, t, from, to);
        int l1 = space_.l(r, t, from);
        int l2 = space_.l(r, t + 1, to);
        Row r1;
        r1.kind = RowKind::UpsUb1; r1.r = r; r1.t = t; r1.c = from; r1.c2 = to;
        r1.hi = 0.0;
        r1.terms = {{y, 1.0}, {l1, -1.0}};
        model_.add_row(std::move(r1));
        Row r2;
        r2.kind = RowKind::UpsUb2; r2.r = r; r2.t = t; r2.c = from; r2.c2 = to;
        r2.hi = 0.0;
        r2.terms = {{y, 1.0}, {l2, -1.0}};
        model_.add_row(std::move(r2));
        Row r3;
        r3.kind = RowKind::UpsLb; r3.r = r; r3.t = t; r3.c = from; r3.c2 = to;
        r3.hi = 1.0;
        r3.terms = {{l1, 1.0}, {l2, 1.0}, {y, -1.0}};
        model_.add_row(std::move(r3));
        added += 3;
      }
  return added;
}

int ModelBuilder::emit_alpha_linearization() {
  if (variant_ != DynamicsVariant::A) return 0;
  const int R = space_.robots(), W = window_;
  int added = 0;
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < W; ++t)
      for (int idx = 0; idx < space_.cells(); ++idx) {
        Cell c = space_.cell_at(idx);
        int al = space_.alpha(r, t, c);
        int e = space_.e(t, c);
        int l = space_.l(r, t + 1, c);
        Row r1;
        r1.kind = RowKind::AlphaUb1; r1.r = r; r1.t = t; r1.c = c;
        r1.hi = 0.0;
        r1.terms = {{al, 1.0}, {e, -1.0}};
        model_.add_row(std::move(r1));
        Row r2;
        r2.kind = RowKind::AlphaUb2; r2.r = r; r2.t = t; r2.c = c;
        r2.hi = 0.0;
        r2.terms = {{al, 1.0}, {l, -1.0}};
        model_.add_row(std::move(r2));
        Row r3;
        r3.kind = RowKind::AlphaLb; r3.r = r; r3.t = t; r3.c = c;
        r3.hi = 1.0;
        r3.terms = {{e, 1.0}, {l, 1.0}, {al, -1.0}};
        model_.add_row(std::move(r3));
        added += 3;
      }
  return added;
}

int ModelBuilder::emit_delta_linearization() {
  if (variant_ != DynamicsVariant::B) return 0;
  const int R = space_.robots(), W = window_;
  int added = 0;
  for (int r = 0; r < R; ++r)
    for (int t = 1; t <= W; ++t)
      for (int idx = 0; idx < space_.cells(); ++idx) {
        Cell c = space_.cell_at(idx);
        int de = space_.delta(r, t, c);
        int u = space_.u(r, t);
        int l = space_.l(r, t, c);
        Row r1;
        r1.kind = RowKind::DeltaUb1; r1.r = r; r1.t = t; r1.c = c;
        r1.hi = 0.0;
        r1.terms = {{de, 1.0}, {u, -1.0}};
        model_.add_row(std::move(r1));
        Row r2;
        r2.kind = RowKind::DeltaUb2; r2.r = r; r2.t = t; r2.c = c;
        r2.hi = 0.0;
        r2.terms = {{de, 1.0}, {l, -1.0}};
        model_.add_row(std::move(r2));
        Row r3;
        r3.kind = RowKind::DeltaLb; r3.r = r; r3.t = t; r3.c = c;
        r3.hi = 1.0;
        r3.terms = {{u, 1.0}, {l, 1.0}, {de, -1.0}};
        model_.add_row(std::move(r3));
        added += 3;
      }
  return added;
}

int ModelBuilder::emit_battery_dynamics() {
  const int R = space_.robots(), W = window_;
  const EnergyParams& en = scn_.energy;
  double cr = scn_.uniform_charge_rate();
  int added = 0;
  for (int r = 0; r < R; ++r) {
    model_.fix(space_.bat(r, 0), state_.batteries[r]);
    for (int t = 0; t < W; ++t) {
      Row row;
      row.kind = RowKind::Battery;
      row.r = r;
      row.t = t + 1;
      row.terms.push_back({space_.bat(r, t + 1), 1.0});
      row.terms.push_back({space_.bat(r, t), -1.0});
      if (variant_ == DynamicsVariant::A) {
        // const9: b(t+1) - b(t) + sum l(t+1)(PTX+PSEN) + sum Ups*Pmove
        //         - sum alpha(PTX+PSEN) - u(t+1)(CR+PRX) = -PRX
        for (int idx = 0; idx < space_.cells(); ++idx) {
          Cell c = space_.cell_at(idx);
          double w = en.p_tx(c) + en.p_sen;
          if (w != 0.0) {
            row.terms.push_back({space_.l(r, t + 1, c), w});
            row.terms.push_back({space_.alpha(r, t, c), -w});
          }
        }
        for (const auto& [from, to] : space_.pairs()) {
          double w = move_coeff(from, to);
          if (w != 0.0) row.terms.push_back({space_.ups(r, t, from, to), w});
        }
        row.terms.push_back({space_.u(r, t + 1), -(cr + en.p_rx)});
        row.lo = row.hi = -en.p_rx;
      } else {
        // const22: b(t+1) = b(t) + (CR+PRX+PSEN)u(t+1) - PRX - PSEN
        //          - sum Ups*Pmove + sum PTX*delta(t+1) - sum PTX*l(t+1)
        row.terms.push_back({space_.u(r, t + 1), -(cr + en.p_rx + en.p_sen)});
        for (const auto& [from, to] : space_.pairs()) {
          double w = move_coeff(from, to);
          if (w != 0.0) row.terms.push_back({space_.ups(r, t, from, to), w});
        }
        for (int idx = 0; idx < space_.cells(); ++idx) {
          Cell c = space_.cell_at(idx);
          double ptx = en.p_tx(c);
          if (ptx != 0.0) {
            row.terms.push_back({space_.delta(r, t + 1, c), -ptx});
            row.terms.push_back({space_.l(r, t + 1, c), ptx});
          }
        }
        row.lo = row.hi = -en.p_rx - en.p_sen;
      }
      model_.add_row(std::move(row));
      ++added;
    }
  }
  return added;
}

int ModelBuilder::emit_exploration_constraints() {
  const int R = space_.robots(), W = window_;
  int added = 0;
  for (int idx = 0; idx < space_.cells(); ++idx) {
    Cell c = space_.cell_at(idx);
    if (grid_.blocked(c)) {
      for (int t = 0; t <= W; ++t) model_.fix(space_.e(t, c), 0.0);
    } else {
      model_.fix(space_.e(0, c), explored0_.count(c) ? 1.0 : 0.0);
    }
  }
  for (int t = 0; t < W; ++t)
    for (int idx = 0; idx < space_.cells(); ++idx) {
      Cell c = space_.cell_at(idx);
      if (grid_.blocked(c)) continue;
      int e0 = space_.e(t, c), e1 = space_.e(t + 1, c);
      Row mono;
      mono.kind = RowKind::ExploreMono; mono.t = t + 1; mono.c = c;
      mono.hi = 0.0;
      mono.terms = {{e0, 1.0}, {e1, -1.0}};
      model_.add_row(std::move(mono));
      ++added;
      for (int r = 0; r < R; ++r) {
        Row vis;
        vis.kind = RowKind::ExploreVisit; vis.r = r; vis.t = t + 1; vis.c = c;
        vis.hi = 0.0;
        vis.terms = {{space_.l(r, t + 1, c), 1.0}, {e1, -1.0}};
        model_.add_row(std::move(vis));
        ++added;
      }
      Row cap;
      cap.kind = RowKind::ExploreCap; cap.t = t + 1; cap.c = c;
      cap.hi = 0.0;
      cap.terms = {{e1, 1.0}, {e0, -1.0}};
      for (int r = 0; r < R; ++r) cap.terms.push_back({space_.l(r, t + 1, c), -1.0});
      model_.add_row(std::move(cap));
      ++added;
    }
  return added;
}

int ModelBuilder::emit_charging_constraints() {
  const int R = space_.robots(), W = window_;
  if (scn_.stations.empty()) {
    for (int r = 0; r < R; ++r)
      for (int t = 1; t <= W; ++t) model_.fix(space_.u(r, t), 0.0);
    return 0;
  }
  int added = 0;
  for (int r = 0; r < R; ++r)
    for (int t = 1; t <= W; ++t) {
      Row row;
      row.kind = RowKind::Charging;
      row.r = r;
      row.t = t;
      row.hi = 0.0;
      row.terms.push_back({space_.u(r, t), 1.0});
      for (const auto& st : scn_.stations) row.terms.push_back({space_.l(r, t, st.cell), -1.0});
      model_.add_row(std::move(row));
      ++added;
    }
  return added;
}

int ModelBuilder::emit_flow_tightening() {
  if (!opts_.flow_tightening) return 0;
  const int R = space_.robots(), W = window_;
  const auto& pairs = space_.pairs();
  std::vector<std::vector<int>> out_of(space_.cells()), into(space_.cells());
  for (size_t i = 0; i < pairs.size(); ++i) {
    out_of[space_.cell_index(pairs[i].first)].push_back(static_cast<int>(i));
    into[space_.cell_index(pairs[i].second)].push_back(static_cast<int>(i));
  }
  int added = 0;
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < W; ++t)
      for (int idx = 0; idx < space_.cells(); ++idx) {
        Cell c = space_.cell_at(idx);
        Row out;
        out.kind = RowKind::FlowOut;
        out.r = r;
        out.t = t;
        out.c = c;
        out.lo = out.hi = 0.0;
        for (int pi : out_of[idx])
          out.terms.push_back({space_.ups(r, t, pairs[pi].first, pairs[pi].second), 1.0});
        out.terms.push_back({space_.l(r, t, c), -1.0});
        model_.add_row(std::move(out));
        Row in;
        in.kind = RowKind::FlowIn;
        in.r = r;
        in.t = t;
        in.c = c;
        in.lo = in.hi = 0.0;
        for (int pi : into[idx])
          in.terms.push_back({space_.ups(r, t, pairs[pi].first, pairs[pi].second), 1.0});
        in.terms.push_back({space_.l(r, t + 1, c), -1.0});
        model_.add_row(std::move(in));
        added += 2;
      }
  return added;
}

void ModelBuilder::emit_objective() {
  double le = scn_.lambda_explore_effective();
  double lb = scn_.mission.lambda_battery;
  if (opts_.weights) {
    le = opts_.weights->first;
    lb = opts_.weights->second;
  }
  for (int idx = 0; idx < space_.cells(); ++idx) {
    Cell c = space_.cell_at(idx);
    if (!grid_.blocked(c)) model_.cols[space_.e(window_, c)].obj = le;
  }
  for (int r = 0; r < space_.robots(); ++r) model_.cols[space_.bat(r, window_)].obj = lb;
}

int ModelBuilder::propagate_reachability() {
  const int R = space_.robots(), W = window_;
  const int n_cells = space_.cells();
  // BFS layers per robot over the known-free grid.
  std::vector<std::vector<int>> dist(R, std::vector<int>(n_cells, W + 1));
  for (int r = 0; r < R; ++r) {
    std::deque<Cell> q;
    q.push_back(state_.positions[r]);
    dist[r][space_.cell_index(state_.positions[r])] = 0;
    while (!q.empty()) {
      Cell c = q.front();
      q.pop_front();
      int d = dist[r][space_.cell_index(c)];
      if (d >= W) continue;
      for (Cell n : neighbors(grid_, c)) {
        int& dn = dist[r][space_.cell_index(n)];
        if (dn > d + 1) {
          dn = d + 1;
          q.push_back(n);
        }
      }
    }
  }
  int fixed = 0;
  auto fix_zero = [&](int col) {
    if (model_.cols[col].ub > 0) {
      model_.cols[col].ub = 0;
      ++fixed;
    }
  };
  for (int r = 0; r < R; ++r)
    for (int t = 0; t <= W; ++t)
      for (int idx = 0; idx < n_cells; ++idx)
        if (dist[r][idx] > t) fix_zero(space_.l(r, t, space_.cell_at(idx)));
  for (int t = 0; t <= W; ++t)
    for (int idx = 0; idx < n_cells; ++idx) {
      bool visitable = false;
      for (int r = 0; r < R && !visitable; ++r) visitable = dist[r][idx] <= t;
      if (!visitable) {
        Cell c = space_.cell_at(idx);
        int col = space_.e(t, c);
        if (!model_.cols[col].fixed()) {
          model_.fix(col, explored0_.count(c) ? 1.0 : 0.0);
          ++fixed;
        }
      }
    }
  if (!scn_.stations.empty()) {
    for (int r = 0; r < R; ++r)
      for (int t = 1; t <= W; ++t) {
        bool reachable = false;
        for (const auto& st : scn_.stations)
          if (dist[r][space_.cell_index(st.cell)] <= t) {
            reachable = true;
            break;
          }
        if (!reachable) fix_zero(space_.u(r, t));
      }
  }
  for (int r = 0; r < R; ++r)
    for (int t = 0; t < W; ++t)
      for (const auto& [from, to] : space_.pairs()) {
        if (model_.cols[space_.l(r, t, from)].ub == 0 ||
            model_.cols[space_.l(r, t + 1, to)].ub == 0)
          fix_zero(space_.ups(r, t, from, to));
      }
  if (variant_ == DynamicsVariant::A) {
    for (int r = 0; r < R; ++r)
      for (int t = 0; t < W; ++t)
        for (int idx = 0; idx < n_cells; ++idx) {
          Cell c = space_.cell_at(idx);
          const Column& ec = model_.cols[space_.e(t, c)];
          if (model_.cols[space_.l(r, t + 1, c)].ub == 0 || ec.ub == 0)
            fix_zero(space_.alpha(r, t, c));
        }
  } else {
    for (int r = 0; r < R; ++r)
      for (int t = 1; t <= W; ++t)
        for (int idx = 0; idx < n_cells; ++idx) {
          Cell c = space_.cell_at(idx);
          if (model_.cols[space_.l(r, t, c)].ub == 0 || model_.cols[space_.u(r, t)].ub == 0)
            fix_zero(space_.delta(r, t, c));
        }
  }
  return fixed;
}

BuiltModel build_model(const Scenario& scenario, int window, const WindowState& state,
                       BuildOptions opts) {
  ModelBuilder b(scenario, window, state, opts);
  BuiltModel out;
  out.n_rows_by_emit[0] = b.emit_position_constraints();
  out.n_rows_by_emit[1] = b.emit_motion_constraints();
  out.n_rows_by_emit[2] = b.emit_upsilon_linearization();
  out.n_rows_by_emit[3] = b.emit_alpha_linearization();
  out.n_rows_by_emit[4] = b.emit_delta_linearization();
  out.n_rows_by_emit[5] = b.emit_battery_dynamics();
  out.n_rows_by_emit[6] = b.emit_exploration_constraints();
  out.n_rows_by_emit[7] = b.emit_charging_constraints();
  out.n_rows_by_emit[8] = b.emit_flow_tightening();
  b.emit_objective();
  if (opts.reach_fixing) b.propagate_reachability();
  b.model().check_valid();

  out.space = b.space();
  out.state0 = state;
  out.explored0 = b.explored0();
  out.variant = b.variant();
  out.grid = b.grid();
  out.lambda_explore = opts.weights ? opts.weights->first : scenario.lambda_explore_effective();
  out.lambda_battery = opts.weights ? opts.weights->second : scenario.mission.lambda_battery;
  out.model = std::move(b.model());
  log::info("model built: " + std::to_string(out.model.cols.size()) + " cols (" +
            std::to_string(out.model.n_free_cols()) + " free, " +
            std::to_string(out.model.n_binary()) + " binary), " +
            std::to_string(out.model.rows.size()) + " rows");
  return out;
}

WindowState initial_window_state(const Scenario& scenario) {
  WindowState st;
  for (const auto& r : scenario.robots) {
    st.positions.push_back(r.start);
    st.batteries.push_back(r.initial_battery);
  }
  return st;
}

}  // namespace oros
