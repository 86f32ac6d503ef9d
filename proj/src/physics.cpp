#include "evoxel/physics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <queue>

namespace evoxel {

namespace {

bool body_is_connected(const Body& body, int n_total) {
    // BFS over 4-neighbors from the first occupied cell.
    int start = -1;
    for (int i = 0; i < kGridSize * kGridSize && start < 0; ++i)
        if (body.grid()[i] != VoxelType::Empty) start = i;
    if (start < 0) return false;
    std::vector<char> seen(kGridSize * kGridSize, 0);
    std::queue<int> frontier;
    frontier.push(start);
    seen[start] = 1;
    int count = 0;
    while (!frontier.empty()) {
        const int cell = frontier.front();
        frontier.pop();
        ++count;
        const int r = cell / kGridSize;
        const int c = cell % kGridSize;
        const int dr[] = {-1, 1, 0, 0};
        const int dc[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const int nr = r + dr[k];
            const int nc = c + dc[k];
            if (nr < 0 || nr >= kGridSize || nc < 0 || nc >= kGridSize) continue;
            const int ncell = nr * kGridSize + nc;
            if (!seen[ncell] && body.grid()[ncell] != VoxelType::Empty) {
                seen[ncell] = 1;
                frontier.push(ncell);
            }
        }
    }
    return count == n_total;
}

double edge_stiffness(VoxelType t, const WorldConfig& cfg) {
    return t == VoxelType::Rigid ? cfg.stiffness_rigid : cfg.stiffness_soft;
}

} // namespace

World::World(const Body& body, const WorldConfig& cfg) : cfg_(cfg) {
    const int n_total = body.descriptors().n_total;
    if (n_total == 0) throw EmptyBody();
    if (!body_is_connected(body, n_total)) throw DisconnectedBody();

    // Corner lattice: (gr, gc) with gr in 0..14 top-down, gc in 0..14.
    std::map<std::pair<int, int>, int> corner_ids;
    auto corner = [&](int gr, int gc) {
        auto [it, inserted] = corner_ids.try_emplace({gr, gc}, static_cast<int>(masses_.size()));
        if (inserted) {
            PointMass pm;
            pm.position = {static_cast<double>(gc), static_cast<double>(kGridSize - gr)};
            masses_.push_back(pm);
        }
        return it->second;
    };

    std::map<std::pair<int, int>, int> edge_index; // (min corner id, max corner id) -> spring
    auto add_edge = [&](int ca, int cb, SpringKind kind, int owner, double k) {
        const auto key = std::minmax(ca, cb);
        auto it = edge_index.find({key.first, key.second});
        if (it != edge_index.end()) {
            Spring& s = springs_[it->second];
            s.owner1 = owner;
            s.stiffness = 0.5 * (s.stiffness + k); // shared edge: mean of owners
            return;
        }
        Spring s;
        s.a = ca;
        s.b = cb;
        s.rest0 = 1.0;
        s.rest = 1.0;
        s.stiffness = k;
        s.bumper_fraction = cfg_.bumper_fraction;
        s.kind = kind;
        s.owner0 = owner;
        edge_index.emplace(std::make_pair(key.first, key.second), static_cast<int>(springs_.size()));
        springs_.push_back(s);
    };

    for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c) {
            const VoxelType t = body.at(r, c);
            if (t == VoxelType::Empty) continue;
            const int v = static_cast<int>(voxels_.size());
            const int tl = corner(r, c);
            const int tr = corner(r, c + 1);
            const int bl = corner(r + 1, c);
            const int br = corner(r + 1, c + 1);
            voxels_.push_back({r, c, t, {bl, br, tr, tl}});

            const double quarter = cfg_.voxel_mass / 4.0;
            for (int id : {tl, tr, bl, br}) masses_[id].mass += quarter;

            const double k = edge_stiffness(t, cfg_);
            add_edge(bl, br, SpringKind::EdgeHorizontal, v, k);
            add_edge(tl, tr, SpringKind::EdgeHorizontal, v, k);
            add_edge(bl, tl, SpringKind::EdgeVertical, v, k);
            add_edge(br, tr, SpringKind::EdgeVertical, v, k);

            // Diagonals are never shared between voxels.
            const double kd = k * cfg_.diagonal_stiffness_factor;
            Spring d1;
            d1.a = bl;
            d1.b = tr;
            d1.rest0 = d1.rest = std::sqrt(2.0);
            d1.stiffness = kd;
            d1.bumper_fraction = cfg_.bumper_fraction;
            d1.kind = SpringKind::Diagonal;
            d1.owner0 = v;
            springs_.push_back(d1);
            Spring d2;
            d2.a = br;
            d2.b = tl;
            d2.rest0 = d2.rest = std::sqrt(2.0);
            d2.stiffness = kd;
            d2.bumper_fraction = cfg_.bumper_fraction;
            d2.kind = SpringKind::Diagonal;
            d2.owner0 = v;
            springs_.push_back(d2);
        }
    }

    // Rest the body on the ground: lowest corner at ground_y.
    double min_y = masses_.front().position.y;
    for (const PointMass& m : masses_) min_y = std::min(min_y, m.position.y);
    for (PointMass& m : masses_) m.position.y += cfg_.ground_y - min_y;

    // Per-spring damping from the damping ratio and the reduced endpoint mass.
    for (Spring& s : springs_) {
        const double ma = masses_[s.a].mass;
        const double mb = masses_[s.b].mass;
        const double reduced = ma * mb / (ma + mb);
        s.damping = 2.0 * cfg_.damping_ratio * std::sqrt(s.stiffness * reduced);
        s.bumper_stiffness = cfg_.bumper_gain * s.stiffness;
    }

    target_areas_.assign(voxels_.size(), 1.0);
    scratch_multipliers_.assign(voxels_.size(), 1.0);
}

void World::set_multipliers(std::span<const double> per_voxel) {
    if (per_voxel.size() != voxels_.size())
        throw std::invalid_argument("expected one multiplier per voxel");
    for (double m : per_voxel) {
        if (!(m >= kMultiplierMin && m <= kMultiplierMax))
            throw std::invalid_argument("rest multiplier outside actuation range");
    }
    for (Spring& s : springs_) {
        switch (s.kind) {
        case SpringKind::EdgeVertical:
            break;
        case SpringKind::EdgeHorizontal: {
            double m = per_voxel[s.owner0];
            if (s.owner1 >= 0) m = 0.5 * (m + per_voxel[s.owner1]);
            s.rest = s.rest0 * m;
            break;
        }
        case SpringKind::Diagonal: {
            const double m = per_voxel[s.owner0];
            s.rest = s.rest0 * std::sqrt((m * m + 1.0) / 2.0);
            break;
        }
        }
    }
    for (std::size_t v = 0; v < voxels_.size(); ++v) target_areas_[v] = per_voxel[v]; // m_s x 1 rectangle
}

Vec2 spring_force_on_b(const Spring& s, const PointMass& a, const PointMass& b) {
    const double dx = b.position.x - a.position.x;
    const double dy = b.position.y - a.position.y;
    const double len = std::sqrt(dx * dx + dy * dy);
    if (len < 1e-9) return {};
    const double ux = dx / len;
    const double uy = dy / len;
    const double rel_v = (b.velocity.x - a.velocity.x) * ux + (b.velocity.y - a.velocity.y) * uy;
    double f = -s.stiffness * (len - s.rest) - s.damping * rel_v;
    const double bumper_at = s.bumper_fraction * s.rest;
    if (len < bumper_at) f += s.bumper_stiffness * (bumper_at - len);
    return {f * ux, f * uy};
}

void World::step() {
    const std::size_t n = masses_.size();
    static thread_local std::vector<Vec2> forces;
    forces.assign(n, Vec2{});

    for (const Spring& s : springs_) {
        const Vec2 f = spring_force_on_b(s, masses_[s.a], masses_[s.b]);
        forces[s.b].x += f.x;
        forces[s.b].y += f.y;
        forces[s.a].x -= f.x;
        forces[s.a].y -= f.y;
    }

    if (cfg_.area_stiffness > 0.0) {
        for (std::size_t v = 0; v < voxels_.size(); ++v) {
            const auto& c = voxels_[v].corners; // CCW: BL, BR, TR, TL
            const double scale = cfg_.area_stiffness * (target_areas_[v] - voxel_signed_area(static_cast<int>(v)));
            for (int i = 0; i < 4; ++i) {
                const Vec2& next = masses_[c[(i + 1) % 4]].position;
                const Vec2& prev = masses_[c[(i + 3) % 4]].position;
                // Gradient of the signed shoelace area w.r.t. corner i.
                forces[c[i]].x += scale * 0.5 * (next.y - prev.y);
                forces[c[i]].y += scale * 0.5 * (prev.x - next.x);
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        PointMass& m = masses_[i];
        double fx = forces[i].x - cfg_.drag * m.mass * m.velocity.x;
        double fy = forces[i].y - cfg_.gravity * m.mass - cfg_.drag * m.mass * m.velocity.y;
        const double penetration = cfg_.ground_y - m.position.y;
        if (penetration > 0.0) {
            const double normal =
                std::max(0.0, cfg_.contact_stiffness * penetration - cfg_.contact_damping * m.velocity.y);
            fy += normal;
            // Regularized Coulomb friction: viscous slope capped by mu*N and,
            // for stability at steep slopes, by the force that would stop the
            // point within one step.
            double ft = -cfg_.tangential_damping * m.velocity.x;
            const double cap = std::min(cfg_.friction * normal, m.mass * std::abs(m.velocity.x) / cfg_.dt);
            ft = std::clamp(ft, -cap, cap);
            fx += ft;
        }
        m.velocity.x += cfg_.dt * fx / m.mass;
        m.velocity.y += cfg_.dt * fy / m.mass;
        m.position.x += cfg_.dt * m.velocity.x;
        m.position.y += cfg_.dt * m.velocity.y;
    }
    time_ += cfg_.dt;
}

void World::check_finite() const {
    for (const PointMass& m : masses_) {
        const bool ok = std::isfinite(m.position.x) && std::isfinite(m.position.y) &&
                        std::isfinite(m.velocity.x) && std::isfinite(m.velocity.y) &&
                        std::abs(m.position.x) < 1e6 && std::abs(m.position.y) < 1e6;
        if (!ok) throw NumericalBlowup();
    }
}

void World::control_sample(std::span<const double> per_voxel) {
    set_multipliers(per_voxel);
    for (int k = 0; k < cfg_.substeps; ++k) step();
    check_finite();
}

double World::run_segment(const SignalFn& signal, int n_cycles, double cycle_seconds,
                          const SampleSink* sink) {
    const double sample_dt = cfg_.dt * cfg_.substeps;
    const int samples_per_cycle = static_cast<int>(std::lround(cycle_seconds / sample_dt));
    if (samples_per_cycle < 1)
        throw std::invalid_argument("control interval dt*substeps exceeds the actuation cycle");
    const double x0 = center_of_mass().x;
    for (int s = 0; s < n_cycles * samples_per_cycle; ++s) {
        signal(time_, scratch_multipliers_);
        control_sample(scratch_multipliers_);
        if (sink != nullptr) (*sink)(time_, *this);
    }
    return center_of_mass().x - x0;
}

Vec2 World::center_of_mass() const {
    double mx = 0.0;
    double my = 0.0;
    double total = 0.0;
    for (const PointMass& m : masses_) {
        mx += m.mass * m.position.x;
        my += m.mass * m.position.y;
        total += m.mass;
    }
    return {mx / total, my / total};
}

double World::voxel_area(int v) const { return std::abs(voxel_signed_area(v)); }

double World::voxel_signed_area(int v) const {
    const auto& c = voxels_[v].corners; // BL, BR, TR, TL: counterclockwise
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Vec2& p = masses_[c[i]].position;
        const Vec2& q = masses_[c[(i + 1) % 4]].position;
        s += p.x * q.y - q.x * p.y;
    }
    return s / 2.0;
}

double World::kinetic_energy() const {
    double e = 0.0;
    for (const PointMass& m : masses_)
        e += 0.5 * m.mass * (m.velocity.x * m.velocity.x + m.velocity.y * m.velocity.y);
    return e;
}

double World::max_point_speed() const {
    double v2 = 0.0;
    for (const PointMass& m : masses_)
        v2 = std::max(v2, m.velocity.x * m.velocity.x + m.velocity.y * m.velocity.y);
    return std::sqrt(v2);
}

void write_trajectory_line(std::ostream& out, double t, const World& world) {
    out << t;
    for (const PointMass& m : world.masses()) out << ' ' << m.position.x << ' ' << m.position.y;
    out << '\n';
}

} // namespace evoxel
