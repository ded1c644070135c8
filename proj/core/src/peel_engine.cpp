#include "peel/peel_engine.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstring>
#include <deque>
#include <memory>
#include <unordered_map>

namespace peel {

namespace {
constexpr std::int32_t kOuter = PlanarMapBall::kOuterFace;
constexpr std::int32_t kFrontier = PlanarMapBall::kFrontierFace;
constexpr std::int32_t kDead = -9;
constexpr std::int32_t kInf = INT32_MAX;
}  // namespace

// ---------------------------------------------------------------------------
// free-standing samplers

double finite_event_mass(const DiskData& disk, int Lh) {
  double mass = 0;
  for (auto& [k, qk] : disk.q.entries)
    mass += to_double(qk) * std::pow(disk.c, k - 1) * disk.u_at(Lh + k - 1) / disk.u_at(Lh);
  for (int k1 = 0; k1 <= Lh - 1; ++k1)
    mass += disk.u_at(k1) * disk.u_at(Lh - 1 - k1) / (disk.c * disk.u_at(Lh));
  return mass;
}

PeelEvent sample_finite_event(const DiskData& disk, int Lh, RngStream& rng) {
  // C_k: q_k W^(Lh+k-1)/W^(Lh);  G_{k1,k2}: W^(k1)W^(k2)/W^(Lh), k1+k2 = Lh-1
  double uL = disk.u_at(Lh);
  double x = rng.next_unit();
  double acc = 0;
  for (auto& [k, qk] : disk.q.entries) {
    acc += to_double(qk) * std::pow(disk.c, k - 1) * disk.u_at(Lh + k - 1) / uL;
    if (x < acc) {
      PeelEvent ev;
      ev.new_face = true;
      ev.k = k;
      return ev;
    }
  }
  for (int k1 = 0; k1 <= Lh - 1; ++k1) {
    acc += disk.u_at(k1) * disk.u_at(Lh - 1 - k1) / (disk.c * uL);
    if (x < acc) {
      PeelEvent ev;
      ev.k1 = k1;
      ev.k2 = Lh - 1 - k1;
      return ev;
    }
  }
  PeelEvent ev;  // numerical slack lands on the last event
  ev.k1 = Lh - 1;
  ev.k2 = 0;
  return ev;
}

int sample_free_perimeter(const DiskData& disk, RngStream& rng) {
  double x = rng.next_unit() * disk.Wc;
  double acc = 0;
  for (int l = 0; l <= disk.L; ++l) {
    acc += disk.u[l];
    if (x < acc) return l;
  }
  // tail draw: invert the leading power model
  double rem = std::max(disk.Wc - acc, 1e-300);
  double v = std::min((x - acc) / rem, 1.0 - 1e-12);
  double m = (disk.L + 0.5) * std::pow(1.0 - v, -2.0 / 3.0);
  return static_cast<int>(m) + 1;
}

ACoreResult run_a_core(const DoobChain& e_chain, RngStream& rng, long step_budget) {
  ACoreResult res;
  int x = 1;
  while (x != 0) {
    if (++res.walk_steps > step_budget) throw BudgetError("core exploration exceeded step budget");
    int y = e_chain.step(x, rng);
    if (y == x - 1) ++res.d_steps;
    x = y;
  }
  res.core_half_perimeter = (res.d_steps + 1) / 2;
  return res;
}

ACoreResult run_a_core(const WalkKit& kit, RngStream rng, long step_budget) {
  DoobChain chain(kit.mu, kit.renewal, DoobChain::H::down);
  return run_a_core(chain, rng, step_budget);
}

// ---------------------------------------------------------------------------
// the exploration machine

struct Explorer::Impl {
  const DiskData* disk = nullptr;
  const WalkKit* kit = nullptr;
  EngineOptions opt;
  ExplorationTrace trace;

  // darts (twin = d ^ 1)
  std::vector<std::int32_t> org_, face_, fnext_, fprev_, hnext_, hprev_, hole_id_;
  std::vector<std::uint8_t> on_arc_;
  // vertices: union-find with distance labels and origin-lists
  std::vector<std::int32_t> vpar_, vsize_, vdist_, vhead_, vtail_;
  std::vector<std::int32_t> dnext_;  // origin-list chain per dart
  // faces
  std::vector<std::int32_t> frep_, fdeg_;
  // finite holes
  struct HoleInfo {
    std::int32_t half = 0;
    std::int32_t rep = -1;   // some frontier dart of the hole
    bool alive = false;
    bool must_fill = false;
  };
  std::vector<HoleInfo> holes_;
  std::vector<std::int32_t> fill_worklist_;
  std::vector<std::int32_t> ball_to_impl_;
  // half-plane state
  std::int32_t arc_left_ = -1, arc_right_ = -1;
  long arc_len_ = 0;
  std::int32_t line_left_ = -1, line_right_ = -1;
  std::int32_t root_dart_ = -1;
  bool halfplane_ = false, tilde_ = false;

  std::deque<std::int32_t> relaxq_;
  std::vector<std::vector<std::int32_t>> buckets_;
  int bcur_ = 0;
  int radius_ = 0;
  long steps_ = 0;

  std::unordered_map<int, std::vector<double>> finite_tables_;
  std::vector<double> nuneg_cum_;
  double nuneg_total_ = 0;
  std::vector<double> cpos_cum_;
  std::vector<int> cpos_k_;
  double pos_total_ = 0;

  RngStream rng_;

  // ---- primitives ---------------------------------------------------------

  void reset() {
    org_.clear(); face_.clear(); fnext_.clear(); fprev_.clear(); hnext_.clear(); hprev_.clear();
    hole_id_.clear(); on_arc_.clear();
    vpar_.clear(); vsize_.clear(); vdist_.clear(); vhead_.clear(); vtail_.clear(); dnext_.clear();
    frep_.clear(); fdeg_.clear();
    holes_.clear();
    arc_left_ = arc_right_ = -1;
    arc_len_ = 0;
    line_left_ = line_right_ = -1;
    root_dart_ = -1;
    relaxq_.clear();
    buckets_.clear();
    bcur_ = 0;
    steps_ = 0;
    trace = {};
    fill_worklist_.clear();
    ball_to_impl_.clear();
  }

  std::int32_t new_vertex(std::int32_t dist = kInf) {
    vpar_.push_back(static_cast<std::int32_t>(vpar_.size()));
    vsize_.push_back(1);
    vdist_.push_back(dist);
    vhead_.push_back(-1);
    vtail_.push_back(-1);
    return vpar_.back();
  }

  std::int32_t find(std::int32_t v) {
    while (vpar_[v] != v) {
      vpar_[v] = vpar_[vpar_[v]];
      v = vpar_[v];
    }
    return v;
  }

  std::int32_t new_edge() {
    std::int32_t d = static_cast<std::int32_t>(org_.size());
    for (int i = 0; i < 2; ++i) {
      org_.push_back(-1);
      face_.push_back(kFrontier);
      fnext_.push_back(-1);
      fprev_.push_back(-1);
      hnext_.push_back(-1);
      hprev_.push_back(-1);
      hole_id_.push_back(-1);
      on_arc_.push_back(0);
      dnext_.push_back(-1);
    }
    return d;
  }

  void set_org(std::int32_t d, std::int32_t v) {
    org_[d] = v;
    v = find(v);
    dnext_[d] = -1;
    if (vhead_[v] == -1) {
      vhead_[v] = vtail_[v] = d;
    } else {
      dnext_[vtail_[v]] = d;
      vtail_[v] = d;
    }
  }

  std::int32_t dorg(std::int32_t d) { return find(org_[d]); }
  std::int32_t dend(std::int32_t d) { return find(org_[d ^ 1]); }

  void push_peel(std::int32_t d) {
    std::int32_t da = vdist_[dorg(d)], db = vdist_[dend(d)];
    std::int32_t key = std::min(da, db);
    if (key > radius_) return;
    buckets_[key].push_back(d);
    if (key < bcur_) bcur_ = key;
  }

  void touch_vertex(std::int32_t v) { relaxq_.push_back(v); }

  void union_verts(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (vsize_[a] < vsize_[b]) std::swap(a, b);
    vpar_[b] = a;
    vsize_[a] += vsize_[b];
    if (vhead_[b] != -1) {
      if (vhead_[a] == -1) {
        vhead_[a] = vhead_[b];
        vtail_[a] = vtail_[b];
      } else {
        dnext_[vtail_[a]] = vhead_[b];
        vtail_[a] = vtail_[b];
      }
    }
    vdist_[a] = std::min(vdist_[a], vdist_[b]);
    touch_vertex(a);
    if (vdist_[a] <= radius_) requeue_frontier_at(a);
  }

  void run_relax() {
    while (!relaxq_.empty()) {
      std::int32_t v = find(relaxq_.front());
      relaxq_.pop_front();
      std::int32_t dv = vdist_[v];
      if (dv > radius_) continue;  // beyond the ball the labels stay unknown
      for (std::int32_t d = vhead_[v]; d != -1; d = dnext_[d]) {
        if (face_[d] == kDead) continue;
        std::int32_t w = dend(d);
        if (vdist_[w] > dv + 1) {
          vdist_[w] = dv + 1;
          touch_vertex(w);
          if (vdist_[w] <= radius_) requeue_frontier_at(w);
        }
      }
    }
  }

  void requeue_frontier_at(std::int32_t v) {
    v = find(v);
    for (std::int32_t d = vhead_[v]; d != -1; d = dnext_[d]) {
      if (face_[d] == kFrontier)
        push_peel(d);
      else if (face_[d ^ 1] == kFrontier)
        push_peel(d ^ 1);
    }
  }

  std::int32_t new_face(std::int32_t rep, std::int32_t deg) {
    frep_.push_back(rep);
    fdeg_.push_back(deg);
    return static_cast<std::int32_t>(frep_.size()) - 1;
  }

  void hlink(std::int32_t a, std::int32_t b) {
    hnext_[a] = b;
    hprev_[b] = a;
  }

  std::int32_t new_hole(std::int32_t half, std::int32_t rep, bool must_fill = false) {
    holes_.push_back({half, rep, true, must_fill});
    if (must_fill) fill_worklist_.push_back(static_cast<std::int32_t>(holes_.size()) - 1);
    return static_cast<std::int32_t>(holes_.size()) - 1;
  }

  // ---- event executors -----------------------------------------------------

  // Reveal a face of half-degree k on frontier dart g (face on g's left).
  void exec_face(std::int32_t g, int k) {
    bool on_arc = on_arc_[g] != 0;
    std::int32_t f = new_face(g, 2 * k);
    std::int32_t x0 = dorg(g), x1 = dend(g);
    face_[g] = f;
    on_arc_[g] = 0;
    int n = 2 * k - 1;
    std::vector<std::int32_t> m(n);
    for (int i = 0; i < n; ++i) m[i] = new_edge();
    fnext_[g] = m[0];
    fprev_[m[0]] = g;
    for (int i = 0; i + 1 < n; ++i) {
      fnext_[m[i]] = m[i + 1];
      fprev_[m[i + 1]] = m[i];
    }
    fnext_[m[n - 1]] = g;
    fprev_[g] = m[n - 1];
    for (int i = 0; i < n; ++i) face_[m[i]] = f;
    std::int32_t prev = x1;
    for (int i = 0; i < n; ++i) {
      std::int32_t nxt = i == n - 1 ? x0 : new_vertex();
      set_org(m[i], prev);
      set_org(m[i] ^ 1, nxt);
      prev = nxt;
    }
    // frontier replacement: [m[n-1]^1, ..., m[0]^1] takes g's slot
    std::int32_t before = hprev_[g], after = hnext_[g];
    std::int32_t first = m[n - 1] ^ 1, last = m[0] ^ 1;
    for (int i = n - 1; i > 0; --i) hlink(m[i] ^ 1, m[i - 1] ^ 1);
    if (on_arc) {
      for (int i = 0; i < n; ++i) on_arc_[m[i] ^ 1] = 1;
      if (before != -1) hlink(before, first);
      else {
        hprev_[first] = -1;
        arc_left_ = first;
      }
      if (after != -1) hlink(last, after);
      else {
        hnext_[last] = -1;
        arc_right_ = last;
      }
      arc_len_ += 2 * k - 2;
    } else {
      std::int32_t hid = hole_id_[g];
      for (int i = 0; i < n; ++i) hole_id_[m[i] ^ 1] = hid;
      if (after == g) throw ConsistencyError("degenerate hole cycle");
      hlink(before, first);
      hlink(last, after);
      holes_[hid].half += k - 1;
      if (holes_[hid].rep == g) holes_[hid].rep = first;
    }
    hnext_[g] = hprev_[g] = -1;
    hole_id_[g] = -1;
    touch_vertex(x0);
    touch_vertex(x1);
    run_relax();
    for (int i = 0; i < n; ++i) push_peel(m[i] ^ 1);
  }

  // Identify frontier darts d and dp. Keeps edge (d, d^1), kills (dp, dp^1).
  // Hole-cycle/arc relinking is left to the caller.
  void exec_glue_core(std::int32_t d, std::int32_t dp) {
    std::int32_t t = dp ^ 1;  // realized side being replaced by d
    face_[d] = face_[t];
    on_arc_[d] = 0;
    if (face_[t] >= 0 && frep_[face_[t]] == t) frep_[face_[t]] = d;
    fnext_[d] = fnext_[t];
    fprev_[d] = fprev_[t];
    if (fnext_[t] != -1) fprev_[fnext_[t]] = d;
    if (fprev_[t] != -1) fnext_[fprev_[t]] = d;
    if (line_left_ == t) line_left_ = d;
    if (line_right_ == t) line_right_ = d;
    if (root_dart_ == t) root_dart_ = d;
    if (root_dart_ == dp) root_dart_ = d ^ 1;
    union_verts(org_[d], org_[t]);      // org(d) = end(dp)
    union_verts(org_[d ^ 1], org_[dp]); // end(d) = org(dp)
    face_[dp] = kDead;
    face_[t] = kDead;
    hnext_[d] = hprev_[d] = hnext_[dp] = hprev_[dp] = -1;
    hole_id_[d] = hole_id_[dp] = -1;
    run_relax();
  }

  // Splits a closed finite hole by identifying d with dp; the strictly-
  // between side following hnext from d has half-perimeter k1.
  void split_finite_hole(std::int32_t d, std::int32_t dp, int k1, int k2) {
    std::int32_t hid = hole_id_[d];
    bool mf = holes_[hid].must_fill;
    std::int32_t a_first = hnext_[d] == dp ? -1 : hnext_[d];
    std::int32_t a_last = hprev_[dp] == d ? -1 : hprev_[dp];
    std::int32_t b_first = hnext_[dp] == d ? -1 : hnext_[dp];
    std::int32_t b_last = hprev_[d] == dp ? -1 : hprev_[d];
    exec_glue_core(d, dp);
    holes_[hid].alive = false;
    if (a_first != -1) {
      hlink(a_last, a_first);
      relabel_hole(a_first, new_hole(k1, a_first, mf));
    }
    if (b_first != -1) {
      hlink(b_last, b_first);
      relabel_hole(b_first, new_hole(k2, b_first, mf));
    }
  }

  void relabel_hole(std::int32_t rep, std::int32_t hid) {
    std::int32_t d = rep;
    do {
      hole_id_[d] = hid;
      on_arc_[d] = 0;
      push_peel(d);
      d = hnext_[d];
    } while (d != rep);
  }

  std::int32_t advance(std::int32_t d, int n) {
    while (n-- > 0) d = hnext_[d];
    return d;
  }
  std::int32_t retreat(std::int32_t d, int n) {
    while (n-- > 0) d = hprev_[d];
    return d;
  }

  // ---- half-plane events ----------------------------------------------------

  // Arc peel at g identified within the arc: the enclosed side of half-
  // perimeter h lies left (toward arc_left_) or right of g.
  void exec_within_arc(std::int32_t g, int h, bool left) {
    std::int32_t target = left ? retreat(g, 2 * h + 1) : advance(g, 2 * h + 1);
    std::int32_t d = left ? target : g;
    std::int32_t dp = left ? g : target;
    std::int32_t a_first = hnext_[d] == dp ? -1 : hnext_[d];
    std::int32_t a_last = hprev_[dp] == d ? -1 : hprev_[dp];
    std::int32_t before = hprev_[d];  // arc dart left of d, may be -1
    std::int32_t after = hnext_[dp];  // arc dart right of dp, may be -1
    exec_glue_core(d, dp);
    if (a_first != -1) {
      hlink(a_last, a_first);
      relabel_hole(a_first, new_hole(h, a_first));
    }
    if (before != -1) hnext_[before] = after;
    else arc_left_ = after;
    if (after != -1) hprev_[after] = before;
    else arc_right_ = before;
    arc_len_ -= 2 * h + 2;
  }

  // Peel dart g on the arc glued beyond the left anchor, enclosing a hole of
  // half-perimeter h; consumes everything left of g plus j fresh line edges.
  void exec_beyond_left(std::int32_t g, int h) {
    int consumed = 0;
    for (std::int32_t d = arc_left_; d != g; d = hnext_[d]) ++consumed;
    int j = 2 * h - consumed;
    std::int32_t e_first = arc_left_;
    std::int32_t x_anchor = dorg(e_first);  // X0 (equals dorg(g) when l = 1)
    std::int32_t v_lm1 = dorg(g);

    std::vector<std::int32_t> dh(j);  // hole-side darts, pointing rightward
    std::int32_t right_v = x_anchor;
    for (int i = 0; i < j; ++i) {  // i = 0 is adjacent to X0
      dh[i] = new_edge();
      std::int32_t left_v = i == j - 1 ? v_lm1 : new_vertex();
      set_org(dh[i], left_v);
      set_org(dh[i] ^ 1, right_v);
      face_[dh[i] ^ 1] = kOuter;
      right_v = left_v;
    }
    std::int32_t hole_rep = -1;
    if (h > 0) {
      std::vector<std::int32_t> cyc;
      cyc.reserve(2 * h);
      for (int i = j - 1; i >= 0; --i) cyc.push_back(dh[i]);
      for (std::int32_t d = e_first; d != g; d = hnext_[d]) cyc.push_back(d);
      for (std::size_t i = 0; i < cyc.size(); ++i) hlink(cyc[i], cyc[(i + 1) % cyc.size()]);
      hole_rep = cyc[0];
    }
    // the peeled edge becomes the new leftmost line edge
    std::int32_t after = hnext_[g];
    face_[g] = kOuter;
    on_arc_[g] = 0;
    std::int32_t at = line_left_;
    for (int i = 0; i < j; ++i) {
      fnext_[at] = dh[i] ^ 1;
      fprev_[dh[i] ^ 1] = at;
      at = dh[i] ^ 1;
    }
    fnext_[at] = g;
    fprev_[g] = at;
    fnext_[g] = -1;
    line_left_ = g;
    arc_left_ = after;
    if (after != -1) hprev_[after] = -1;
    else arc_right_ = -1;
    hnext_[g] = hprev_[g] = -1;
    arc_len_ -= consumed + 1;
    // with no fresh edges the enclosed cycle closes by identifying the old
    // anchor with the junction vertex
    if (j == 0 && h > 0) union_verts(x_anchor, v_lm1);
    touch_vertex(org_[g ^ 1]);
    touch_vertex(x_anchor);
    run_relax();
    if (hole_rep != -1) relabel_hole(hole_rep, new_hole(h, hole_rep));
  }

  void exec_beyond_right(std::int32_t g, int h) {
    int consumed = 0;
    for (std::int32_t d = arc_right_; d != g; d = hprev_[d]) ++consumed;
    int j = 2 * h - consumed;
    std::int32_t e_last = arc_right_;
    std::int32_t y_anchor = dend(e_last);  // Y0 (equals dend(g) when consumed = 0)
    std::int32_t v_lp = dend(g);

    std::vector<std::int32_t> dh(j);
    std::int32_t left_v = y_anchor;
    for (int i = 0; i < j; ++i) {  // i = 0 adjacent to Y0
      dh[i] = new_edge();
      std::int32_t right_v = i == j - 1 ? v_lp : new_vertex();
      set_org(dh[i], left_v);
      set_org(dh[i] ^ 1, right_v);
      face_[dh[i] ^ 1] = kOuter;
      left_v = right_v;
    }
    std::int32_t hole_rep = -1;
    if (h > 0) {
      std::vector<std::int32_t> cyc;
      cyc.reserve(2 * h);
      for (std::int32_t d = hnext_[g]; d != -1; d = hnext_[d]) cyc.push_back(d);
      for (int i = 0; i < j; ++i) cyc.push_back(dh[i]);
      for (std::size_t i = 0; i < cyc.size(); ++i) hlink(cyc[i], cyc[(i + 1) % cyc.size()]);
      hole_rep = cyc[0];
    }
    std::int32_t before = hprev_[g];
    face_[g] = kOuter;
    on_arc_[g] = 0;
    fprev_[g] = -1;
    std::int32_t at = g;
    for (int i = j - 1; i >= 0; --i) {
      fnext_[at] = dh[i] ^ 1;
      fprev_[dh[i] ^ 1] = at;
      at = dh[i] ^ 1;
    }
    fnext_[at] = line_right_;
    fprev_[line_right_] = at;
    line_right_ = g;
    arc_right_ = before;
    if (before != -1) hnext_[before] = -1;
    else arc_left_ = -1;
    hnext_[g] = hprev_[g] = -1;
    arc_len_ -= consumed + 1;
    if (j == 0 && h > 0) union_verts(y_anchor, v_lp);
    touch_vertex(org_[g]);
    touch_vertex(y_anchor);
    run_relax();
    if (hole_rep != -1) relabel_hole(hole_rep, new_hole(h, hole_rep));
  }

  // ---- finite holes ----------------------------------------------------------

  const std::vector<double>& finite_table(int Lh) {
    auto it = finite_tables_.find(Lh);
    if (it != finite_tables_.end()) return it->second;
    std::vector<double> cum;
    cum.reserve(disk->q.entries.size() + Lh);
    double acc = 0;
    double uL = disk->u_at(Lh);
    for (auto& [k, qk] : disk->q.entries) {
      acc += to_double(qk) * std::pow(disk->c, k - 1) * disk->u_at(Lh + k - 1) / uL;
      cum.push_back(acc);
    }
    for (int k1 = 0; k1 <= Lh - 1; ++k1) {
      acc += disk->u_at(k1) * disk->u_at(Lh - 1 - k1) / (disk->c * uL);
      cum.push_back(acc);
    }
    if (std::fabs(acc - 1.0) > 1e-9)
      throw ConsistencyError("finite peel masses sum to " + std::to_string(acc) + " at L=" +
                             std::to_string(Lh));
    return finite_tables_.emplace(Lh, std::move(cum)).first->second;
  }

  void peel_finite(std::int32_t g) {
    int Lh = holes_[hole_id_[g]].half;
    const std::vector<double>& cum = finite_table(Lh);
    double x = rng_.next_unit() * cum.back();
    std::size_t idx = std::lower_bound(cum.begin(), cum.end(), x) - cum.begin();
    std::size_t natoms = disk->q.entries.size();
    if (idx < natoms) {
      auto it = disk->q.entries.begin();
      std::advance(it, static_cast<long>(idx));
      if (opt.record_trace) trace.records.push_back({0, it->first, 0});
      exec_face(g, it->first);
      return;
    }
    int k1 = static_cast<int>(idx - natoms);
    int k2 = Lh - 1 - k1;
    if (opt.record_trace) trace.records.push_back({1, k1, k2});
    std::int32_t target = k1 <= k2 ? advance(g, 2 * k1 + 1) : retreat(g, 2 * k2 + 1);
    split_finite_hole(g, target, k1, k2);
  }

  // ---- arc peeling ------------------------------------------------------------

  void build_nu_tables() {
    const NuMeasure& nu = kit->nu;
    cpos_cum_.clear();
    cpos_k_.clear();
    double acc = 0;
    for (auto& [k, v] : nu.pos) {
      acc += v;
      cpos_cum_.push_back(acc);
      cpos_k_.push_back(k + 1);  // face half-degree
    }
    pos_total_ = acc;
    nuneg_cum_.resize(nu.K);
    double s = 0;
    for (int k = 1; k <= nu.K; ++k) {
      s += nu.at(-k);
      nuneg_cum_[k - 1] = s;
    }
    nuneg_total_ = s + nu.neg_tail_mass(nu.K);
  }

  int sample_neg_h(bool* from_tail) {
    double x = rng_.next_unit() * nuneg_total_;
    if (x >= nuneg_cum_.back()) {
      *from_tail = true;
      ++trace.tail_draws;
      double v = std::min((x - nuneg_cum_.back()) / (nuneg_total_ - nuneg_cum_.back()),
                          1.0 - 1e-12);
      int k = 1 + static_cast<int>(std::ceil((kit->nu.K - 1) * std::pow(1.0 - v, -2.0 / 3.0)));
      return k - 1;
    }
    *from_tail = false;
    int k = 1 + static_cast<int>(std::lower_bound(nuneg_cum_.begin(), nuneg_cum_.end(), x) -
                                 nuneg_cum_.begin());
    return k - 1;
  }

  // one proposed arc event at g; false = rejected (tilde h-weighting)
  bool try_peel_arc(std::int32_t g) {
    double total = pos_total_ + nuneg_total_;
    double x = rng_.next_unit() * total;
    double up_bound = 1.0;
    long p = arc_len_;
    if (tilde_) {
      int kmax = cpos_k_.empty() ? 1 : cpos_k_.back();
      up_bound = kit->renewal.up(static_cast<int>(p) + 2 * kmax - 2);
    }
    if (x < pos_total_) {
      std::size_t idx =
          std::lower_bound(cpos_cum_.begin(), cpos_cum_.end(), x) - cpos_cum_.begin();
      int k = cpos_k_[idx];
      if (tilde_) {
        double pnew = kit->renewal.up(static_cast<int>(p) + 2 * k - 2);
        if (rng_.next_unit() * up_bound >= pnew) return false;
      }
      if (opt.record_trace) trace.records.push_back({0, k, 0});
      exec_face(g, k);
      return true;
    }
    bool left = rng_.bernoulli(0.5);
    bool from_tail = false;
    int h = sample_neg_h(&from_tail);
    // within iff 2h+1 darts exist strictly on the chosen side of g
    int to_end = 0;
    bool within = false;
    {
      std::int32_t d = g;
      while (to_end < 2 * h + 1) {
        d = left ? hprev_[d] : hnext_[d];
        if (d == -1) break;
        ++to_end;
      }
      within = to_end == 2 * h + 1;
    }
    long pnew_len = within ? p - 2 * h - 2 : p - to_end - 1;
    if (tilde_) {
      double pnew = pnew_len <= 0 ? 0.0 : kit->renewal.up(static_cast<int>(pnew_len));
      if (rng_.next_unit() * up_bound >= pnew) return false;
    }
    if (opt.record_trace)
      trace.records.push_back({static_cast<std::uint8_t>(within ? 1 : (left ? 2 : 3)), h,
                               static_cast<std::int32_t>(to_end)});
    if (within)
      exec_within_arc(g, h, left);
    else if (left)
      exec_beyond_left(g, h);
    else
      exec_beyond_right(g, h);
    return true;
  }

  // General mode with an empty arc: expose one boundary-line edge at the
  // lower-distance end.
  void materialize_line_edge() {
    std::int32_t vl = dend(line_left_);
    std::int32_t vr = dorg(line_right_);
    bool left = vdist_[vl] <= vdist_[vr];
    std::int32_t e = new_edge();
    if (left) {
      std::int32_t w = new_vertex();
      set_org(e, w);
      set_org(e ^ 1, vl);
      face_[e ^ 1] = kOuter;
      fnext_[line_left_] = e ^ 1;
      fprev_[e ^ 1] = line_left_;
      fnext_[e ^ 1] = -1;
      line_left_ = e ^ 1;
    } else {
      std::int32_t w = new_vertex();
      set_org(e, vr);
      set_org(e ^ 1, w);
      face_[e ^ 1] = kOuter;
      fprev_[line_right_] = e ^ 1;
      fnext_[e ^ 1] = line_right_;
      fprev_[e ^ 1] = -1;
      line_right_ = e ^ 1;
    }
    hnext_[e] = hprev_[e] = -1;
    on_arc_[e] = 1;
    arc_left_ = arc_right_ = e;
    arc_len_ = 1;
    touch_vertex(org_[e]);
    touch_vertex(org_[e ^ 1]);
    run_relax();
    push_peel(e);
  }

  // ---- setup and main loop ----------------------------------------------------

  void init_finite(int l) {
    std::vector<std::int32_t> verts(2 * l);
    for (int i = 0; i < 2 * l; ++i) verts[i] = new_vertex();
    std::vector<std::int32_t> edges(2 * l);
    for (int i = 0; i < 2 * l; ++i) edges[i] = new_edge();
    for (int i = 0; i < 2 * l; ++i) {
      std::int32_t o = edges[i];
      set_org(o, verts[i]);
      set_org(o ^ 1, verts[(i + 1) % (2 * l)]);
      face_[o] = kOuter;
    }
    for (int i = 0; i < 2 * l; ++i) {
      fnext_[edges[i]] = edges[(i + 1) % (2 * l)];
      fprev_[edges[(i + 1) % (2 * l)]] = edges[i];
    }
    for (int i = 0; i < 2 * l; ++i)
      hlink(edges[i] ^ 1, edges[(i + 2 * l - 1) % (2 * l)] ^ 1);
    std::int32_t hid = new_hole(l, edges[0] ^ 1);
    for (int i = 0; i < 2 * l; ++i) hole_id_[edges[i] ^ 1] = hid;
    root_dart_ = edges[0] ^ 1;
    vdist_[find(org_[root_dart_])] = 0;
    touch_vertex(org_[root_dart_]);
    run_relax();
    for (int i = 0; i < 2 * l; ++i) push_peel(edges[i] ^ 1);
  }

  void init_halfplane() {
    std::int32_t e = new_edge();
    std::int32_t v0 = new_vertex(0), v1 = new_vertex();
    set_org(e, v0);
    set_org(e ^ 1, v1);
    face_[e ^ 1] = kOuter;
    fnext_[e ^ 1] = -1;
    fprev_[e ^ 1] = -1;
    line_left_ = line_right_ = e ^ 1;
    arc_left_ = arc_right_ = e;
    arc_len_ = 1;
    on_arc_[e] = 1;
    hnext_[e] = hprev_[e] = -1;
    root_dart_ = e;
    touch_vertex(v0);
    run_relax();
    push_peel(e);
  }

  void check_invariants(const char* where) {
    std::int64_t nd = static_cast<std::int64_t>(org_.size());
    std::int64_t alive = 0;
    std::vector<std::int8_t> vseen(vpar_.size(), 0);
    std::int64_t V = 0;
    for (std::int32_t d = 0; d < nd; ++d) {
      if (face_[d] == kDead) continue;
      ++alive;
      std::int32_t r = find(org_[d]);
      if (!vseen[r]) {
        vseen[r] = 1;
        ++V;
      }
    }
    std::int64_t E = alive / 2;
    std::int64_t H = 0;
    std::vector<std::int8_t> dseen(nd, 0);
    for (std::int32_t d = arc_left_; d != -1; d = hnext_[d]) dseen[d] = 1;
    for (std::int32_t d = 0; d < nd; ++d) {
      if (face_[d] != kFrontier || dseen[d]) continue;
      ++H;
      std::int32_t x = d;
      int guard = 0;
      do {
        dseen[x] = 1;
        x = hnext_[x];
        if (x == -1 || ++guard > nd)
          throw ConsistencyError(std::string("broken hole cycle after ") + where);
      } while (x != d);
    }
    std::int64_t F = static_cast<std::int64_t>(frep_.size()) + H + 1;
    if (V - E + F != 2)
      throw ConsistencyError(std::string("euler violated after ") + where + ": V=" +
                             std::to_string(V) + " E=" + std::to_string(E) + " F=" +
                             std::to_string(F));
  }

  std::int32_t pop_peel() {
    while (bcur_ <= radius_ + 0) {
      if (bcur_ >= static_cast<int>(buckets_.size())) break;
      if (buckets_[bcur_].empty()) {
        ++bcur_;
        continue;
      }
      std::int32_t d = buckets_[bcur_].back();
      buckets_[bcur_].pop_back();
      if (face_[d] != kFrontier) continue;
      std::int32_t key = std::min(vdist_[dorg(d)], vdist_[dend(d)]);
      if (key != bcur_) continue;  // a fresher copy sits in key's bucket
      return d;
    }
    return -1;
  }

  void do_peel(std::int32_t g) {
    if (++steps_ > opt.step_budget) throw BudgetError("exploration exceeded its step budget");
    ++trace.steps;
    if (on_arc_[g]) {
      int guard = 0;
      while (!try_peel_arc(g))
        if (++guard > 1000000) throw ConsistencyError("arc step rejection never accepted");
      if (opt.validate_each_step) check_invariants("arc step");
    } else {
      peel_finite(g);
      if (opt.validate_each_step) check_invariants("finite step");
    }
  }

  void start(BallMode mode, int root_l, RngStream rng) {
    reset();
    rng_ = rng;
    radius_ = 0;
    halfplane_ = mode != BallMode::finite;
    tilde_ = mode == BallMode::halfplane_tilde;
    if (halfplane_ && !kit) throw ConfigError("half-plane exploration needs a walk kit");
    buckets_.assign(2, {});
    bcur_ = 0;
    if (halfplane_) {
      build_nu_tables();
      init_halfplane();
    } else {
      if (root_l < 1) throw ConfigError("finite mode needs a root half-perimeter >= 1");
      init_finite(root_l);
    }
  }

  void requeue_all_frontier() {
    if (halfplane_)
      for (std::int32_t d = arc_left_; d != -1; d = hnext_[d]) push_peel(d);
    for (const HoleInfo& h : holes_) {
      if (!h.alive) continue;
      std::int32_t d = h.rep;
      do {
        push_peel(d);
        d = hnext_[d];
      } while (d != h.rep);
    }
  }

  void drain_queue() {
    while (true) {
      if (halfplane_ && arc_len_ == 0) {
        if (tilde_) throw ConsistencyError("tilde exploration lost its exposed boundary");
        std::int32_t vl = dend(line_left_), vr = dorg(line_right_);
        if (std::min(vdist_[vl], vdist_[vr]) <= radius_) materialize_line_edge();
      }
      std::int32_t g = pop_peel();
      if (g == -1) break;
      do_peel(g);
    }
  }

  void extend_to_radius(int radius) {
    if (radius > radius_) {
      radius_ = radius;
      buckets_.assign(radius + 2, {});
      bcur_ = 0;
      requeue_all_frontier();
    }
    drain_queue();
  }

  void fill_frontier(const std::vector<std::int32_t>& snapshot_darts) {
    if (ball_to_impl_.empty()) throw ConfigError("fill_frontier needs a prior snapshot");
    for (std::int32_t bd : snapshot_darts) {
      if (bd < 0 || bd >= static_cast<std::int32_t>(ball_to_impl_.size()))
        throw ConfigError("fill_frontier: dart id out of range");
      std::int32_t d = ball_to_impl_[bd];
      if (face_[d] != kFrontier || on_arc_[d]) continue;
      std::int32_t hid = hole_id_[d];
      if (!holes_[hid].must_fill) {
        holes_[hid].must_fill = true;
        fill_worklist_.push_back(hid);
      }
    }
    while (!fill_worklist_.empty()) {
      std::int32_t hid = fill_worklist_.back();
      if (!holes_[hid].alive) {
        fill_worklist_.pop_back();
        continue;
      }
      do_peel(holes_[hid].rep);
    }
    drain_queue();  // filling can shorten distances; re-certify the radius
  }

  PlanarMapBall extract() {
    PlanarMapBall ball;
    std::int64_t nd = static_cast<std::int64_t>(org_.size());
    std::vector<std::int32_t> dmap(nd, -1);
    std::int32_t cnt = 0;
    for (std::int32_t d = 0; d < nd; ++d)
      if (face_[d] != kDead) dmap[d] = cnt++;
    ball_to_impl_.assign(cnt, -1);
    for (std::int32_t d = 0; d < nd; ++d)
      if (dmap[d] >= 0) ball_to_impl_[dmap[d]] = d;
    ball.org.resize(cnt);
    ball.face.resize(cnt);
    ball.fnext.assign(cnt, -1);
    std::vector<std::int32_t> vmap(vpar_.size(), -1);
    std::int32_t vcnt = 0;
    for (std::int32_t d = 0; d < nd; ++d) {
      if (dmap[d] < 0) continue;
      std::int32_t r = find(org_[d]);
      if (vmap[r] < 0) vmap[r] = vcnt++;
      ball.org[dmap[d]] = vmap[r];
      ball.face[dmap[d]] = face_[d];
      if (face_[d] >= 0 || face_[d] == kOuter)
        ball.fnext[dmap[d]] = fnext_[d] >= 0 ? dmap[fnext_[d]] : -1;
    }
    ball.n_vertices = vcnt;
    ball.vdist.assign(vcnt, kInf);
    for (std::size_t r = 0; r < vpar_.size(); ++r)
      if (vpar_[r] == static_cast<std::int32_t>(r) && vmap[r] >= 0)
        ball.vdist[vmap[r]] = vdist_[r];
    ball.face_rep.resize(frep_.size());
    ball.face_degree = fdeg_;
    for (std::size_t f = 0; f < frep_.size(); ++f) ball.face_rep[f] = dmap[frep_[f]];
    ball.root_dart = dmap[root_dart_];
    if (halfplane_) {
      for (std::int32_t d = line_right_; d != -1; d = fnext_[d])
        ball.outer_contour.push_back(dmap[d]);
      ball.outer_is_cycle = false;
      for (std::int32_t d = arc_left_; d != -1; d = hnext_[d])
        ball.frontier_arc.push_back(dmap[d]);
    } else {
      std::int32_t start = root_dart_ ^ 1;
      std::int32_t d = start;
      do {
        ball.outer_contour.push_back(dmap[d]);
        d = fnext_[d];
      } while (d != start);
      ball.outer_is_cycle = true;
    }
    std::vector<std::int8_t> seen(nd, 0);
    for (std::int32_t d = arc_left_; d != -1; d = hnext_[d]) seen[d] = 1;
    for (std::int32_t d = 0; d < nd; ++d) {
      if (face_[d] != kFrontier || seen[d]) continue;
      std::vector<std::int32_t> cyc;
      std::int32_t x = d;
      do {
        seen[x] = 1;
        cyc.push_back(dmap[x]);
        x = hnext_[x];
      } while (x != d);
      ball.holes.push_back(std::move(cyc));
    }
    ball.certified_radius = radius_;
    return ball;
  }
};

Explorer::Explorer(const DiskData& disk, const WalkKit* kit, EngineOptions opt)
    : impl_(std::make_shared<Impl>()) {
  impl_->disk = &disk;
  impl_->kit = kit;
  impl_->opt = opt;
}

PlanarMapBall Explorer::build_ball(BallMode mode, int root_half_perimeter, int radius,
                                   RngStream rng) {
  impl_->start(mode, root_half_perimeter, rng);
  impl_->extend_to_radius(radius);
  return impl_->extract();
}

void Explorer::start(BallMode mode, int root_half_perimeter, RngStream rng) {
  impl_->start(mode, root_half_perimeter, rng);
}

void Explorer::extend_to_radius(int radius) { impl_->extend_to_radius(radius); }

void Explorer::fill_frontier(const std::vector<std::int32_t>& snapshot_darts) {
  impl_->fill_frontier(snapshot_darts);
}

PlanarMapBall Explorer::snapshot() { return impl_->extract(); }

const ExplorationTrace& Explorer::trace() const { return impl_->trace; }

std::uint64_t ExplorationTrace::summary_hash() const {
  std::uint64_t h = 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(steps);
  auto mix = [&](std::uint64_t x) { h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
  for (const TraceRecord& r : records) {
    mix(r.kind);
    mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(r.a)));
    mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(r.b)));
  }
  mix(static_cast<std::uint64_t>(tail_draws));
  return h;
}

double tilde_step_mass(const WalkKit& kit, int p, int l) {
  const NuMeasure& nu = kit.nu;
  const RenewalFunctions& r = kit.renewal;
  double s = 0;
  for (auto& [k, v] : nu.pos) s += v * r.up(p + 2 * k) / r.up(p);
  for (int side = 0; side < 2; ++side) {
    int fl = side == 0 ? p - l : l - 1;
    int j = 1;
    for (; p - 2 * j > fl; ++j) s += 0.5 * nu.at(-j) * r.up(p - 2 * j) / r.up(p);
    s += 0.5 * nu.neg_tail_mass(j - 1) * r.up(fl) / r.up(p);
  }
  return s;
}

}  // namespace peel
