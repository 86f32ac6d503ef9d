#include "evoxel/cppn.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace evoxel {

const char* activation_name(Activation a) {
    switch (a) {
    case Activation::Sin: return "sin";
    case Activation::Abs: return "abs";
    case Activation::Square: return "square";
    case Activation::Sqrt: return "sqrt";
    case Activation::NegSin: return "-sin";
    case Activation::NegAbs: return "-abs";
    case Activation::NegSquare: return "-square";
    case Activation::NegSqrt: return "-sqrt";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    for (int i = 0; i < kActivationCount; ++i) {
        const auto a = static_cast<Activation>(i);
        if (name == activation_name(a)) return a;
    }
    throw GenomeParseError("unknown activation: " + name);
}

double apply_activation(Activation a, double v) {
    switch (a) {
    case Activation::Sin: return std::sin(v);
    case Activation::Abs: return std::abs(v);
    case Activation::Square: {
        const double c = std::clamp(v, -1e6, 1e6);
        return c * c;
    }
    case Activation::Sqrt: return std::sqrt(std::abs(v));
    case Activation::NegSin: return -std::sin(v);
    case Activation::NegAbs: return -std::abs(v);
    case Activation::NegSquare: {
        const double c = std::clamp(v, -1e6, 1e6);
        return -(c * c);
    }
    case Activation::NegSqrt: return -std::sqrt(std::abs(v));
    }
    return 0.0;
}

Genome Genome::minimal(std::uint64_t seed) {
    Genome g;
    g.seed_ = seed;
    for (int i = 0; i < kCppnInputs; ++i) g.nodes_.push_back({i, NodeKind::Input, Activation::Sin});
    for (int i = 0; i < kCppnOutputs; ++i)
        g.nodes_.push_back({kCppnInputs + i, NodeKind::Output, Activation::Sin});
    return g;
}

std::vector<int> Genome::hidden_ids() const {
    std::vector<int> out;
    for (const Node& n : nodes_)
        if (n.kind == NodeKind::Hidden) out.push_back(n.id);
    return out;
}

int Genome::node_pos(int id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].id == id) return static_cast<int>(i);
    return -1;
}

bool Genome::edge_exists(int src, int dst) const {
    return std::any_of(edges_.begin(), edges_.end(),
                       [&](const Edge& e) { return e.src == src && e.dst == dst; });
}

bool Genome::path_exists(int from, int to) const {
    if (from == to) return true;
    std::vector<int> stack{from};
    std::set<int> seen{from};
    while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        for (const Edge& e : edges_) {
            if (e.src != cur) continue;
            if (e.dst == to) return true;
            if (seen.insert(e.dst).second) stack.push_back(e.dst);
        }
    }
    return false;
}

std::vector<int> Genome::topo_order() const {
    std::map<int, int> indegree;
    for (const Node& n : nodes_) indegree[n.id] = 0;
    for (const Edge& e : edges_) ++indegree[e.dst];
    std::vector<int> ready;
    for (const Node& n : nodes_)
        if (indegree[n.id] == 0) ready.push_back(n.id);
    std::vector<int> order;
    order.reserve(nodes_.size());
    while (!ready.empty()) {
        const int id = ready.front();
        ready.erase(ready.begin());
        order.push_back(id);
        for (const Edge& e : edges_) {
            if (e.src != id) continue;
            if (--indegree[e.dst] == 0) ready.push_back(e.dst);
        }
    }
    if (order.size() != nodes_.size()) throw CyclicGraph();
    return order;
}

std::array<double, kCppnOutputs> Genome::evaluate(double x, double y, double d) const {
    std::map<int, double> value;
    const std::vector<int> order = topo_order();
    for (int id : order) {
        const Node& n = nodes_[node_pos(id)];
        if (n.kind == NodeKind::Input) {
            value[id] = (id == 0) ? x : (id == 1) ? y : d;
            continue;
        }
        double sum = 0.0;
        for (const Edge& e : edges_)
            if (e.dst == id) sum += e.weight * value[e.src];
        value[id] = (n.kind == NodeKind::Hidden) ? apply_activation(n.activation, sum) : sum;
    }
    std::array<double, kCppnOutputs> out{};
    for (int i = 0; i < kCppnOutputs; ++i) out[i] = value[kCppnInputs + i];
    return out;
}

void Genome::validate() const {
    std::set<int> ids;
    int inputs = 0;
    int outputs = 0;
    for (const Node& n : nodes_) {
        if (!ids.insert(n.id).second) throw InvalidGenome("duplicate node id " + std::to_string(n.id));
        if (n.kind == NodeKind::Input) {
            ++inputs;
            if (n.id < 0 || n.id >= kCppnInputs) throw InvalidGenome("input nodes must have ids 0..2");
        } else if (n.kind == NodeKind::Output) {
            ++outputs;
            if (n.id < kCppnInputs || n.id >= kCppnInputs + kCppnOutputs)
                throw InvalidGenome("output nodes must have ids 3..9");
        }
    }
    if (inputs != kCppnInputs) throw InvalidGenome("expected exactly 3 input nodes");
    if (outputs != kCppnOutputs) throw InvalidGenome("expected exactly 7 output nodes");
    std::set<std::pair<int, int>> pairs;
    for (const Edge& e : edges_) {
        const int sp = node_pos(e.src);
        const int dp = node_pos(e.dst);
        if (sp < 0 || dp < 0) throw InvalidGenome("edge references missing node");
        if (nodes_[sp].kind == NodeKind::Output) throw InvalidGenome("edge out of an output node");
        if (nodes_[dp].kind == NodeKind::Input) throw InvalidGenome("edge into an input node");
        if (!pairs.insert({e.src, e.dst}).second)
            throw InvalidGenome("duplicate edge " + std::to_string(e.src) + "->" + std::to_string(e.dst));
        if (!std::isfinite(e.weight)) throw InvalidGenome("non-finite edge weight");
    }
    topo_order(); // throws CyclicGraph on cycles
}

namespace {

int fresh_node_id(const Genome& g) {
    int max_id = kCppnInputs + kCppnOutputs - 1;
    for (const Node& n : g.nodes()) max_id = std::max(max_id, n.id);
    return max_id + 1;
}

struct CandidatePair {
    int src;
    int dst;
};

std::vector<CandidatePair> addable_edges(const Genome& g) {
    std::vector<CandidatePair> out;
    for (const Node& s : g.nodes()) {
        if (s.kind == NodeKind::Output) continue;
        for (const Node& d : g.nodes()) {
            if (d.kind == NodeKind::Input) continue;
            if (s.id == d.id) continue;
            // g.path_exists / edge_exists are private; reimplement via the
            // public edge list to keep the helper free-standing.
            bool exists = false;
            for (const Edge& e : g.edges())
                if (e.src == s.id && e.dst == d.id) exists = true;
            if (exists) continue;
            // Adding s->d creates a cycle iff d already reaches s.
            std::vector<int> stack{d.id};
            std::set<int> seen{d.id};
            bool reaches = false;
            while (!stack.empty() && !reaches) {
                const int cur = stack.back();
                stack.pop_back();
                for (const Edge& e : g.edges()) {
                    if (e.src != cur) continue;
                    if (e.dst == s.id) {
                        reaches = true;
                        break;
                    }
                    if (seen.insert(e.dst).second) stack.push_back(e.dst);
                }
            }
            if (!reaches) out.push_back({s.id, d.id});
        }
    }
    return out;
}

} // namespace

bool try_mutation(const Genome& g, MutationAction action, Rng& rng, Genome& out) {
    Genome child = g;
    auto& nodes = child.nodes_;
    auto& edges = child.edges_;
    switch (action) {
    case MutationAction::AddNode: {
        if (edges.empty()) return false;
        const std::size_t ei = rng.uniform_index(edges.size());
        const Edge old = edges[ei];
        edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(ei));
        const int id = fresh_node_id(child);
        const auto act = static_cast<Activation>(rng.uniform_index(kActivationCount));
        nodes.push_back({id, NodeKind::Hidden, act});
        edges.push_back({old.src, id, 1.0});
        edges.push_back({id, old.dst, old.weight});
        break;
    }
    case MutationAction::RemoveNode: {
        const auto hidden = g.hidden_ids();
        if (hidden.empty()) return false;
        const int victim = hidden[rng.uniform_index(hidden.size())];
        std::erase_if(nodes, [&](const Node& n) { return n.id == victim; });
        std::erase_if(edges, [&](const Edge& e) { return e.src == victim || e.dst == victim; });
        break;
    }
    case MutationAction::AddEdge: {
        const auto candidates = addable_edges(g);
        if (candidates.empty()) return false;
        const CandidatePair pick = candidates[rng.uniform_index(candidates.size())];
        edges.push_back({pick.src, pick.dst, rng.normal(0.0, 1.0)});
        break;
    }
    case MutationAction::RemoveEdge: {
        if (edges.empty()) return false;
        const std::size_t ei = rng.uniform_index(edges.size());
        edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(ei));
        break;
    }
    case MutationAction::ChangeActivation: {
        const auto hidden = g.hidden_ids();
        if (hidden.empty()) return false;
        const int target = hidden[rng.uniform_index(hidden.size())];
        Node& n = nodes[static_cast<std::size_t>(child.node_pos(target))];
        const int shift = 1 + static_cast<int>(rng.uniform_index(kActivationCount - 1));
        n.activation = static_cast<Activation>((static_cast<int>(n.activation) + shift) % kActivationCount);
        break;
    }
    case MutationAction::ChangeWeight: {
        if (edges.empty()) return false;
        const std::size_t ei = rng.uniform_index(edges.size());
        edges[ei].weight += rng.normal(0.0, 0.5);
        break;
    }
    }
    out = std::move(child);
    return true;
}

Genome mutate(const Genome& g, Rng& rng) {
    constexpr int kActions = 6;
    bool any_applicable = false;
    for (int a = 0; a < kActions; ++a) {
        const auto action = static_cast<MutationAction>(a);
        const bool applicable = (action == MutationAction::AddNode && !g.edges().empty()) ||
                                (action == MutationAction::RemoveNode && !g.hidden_ids().empty()) ||
                                (action == MutationAction::AddEdge && !addable_edges(g).empty()) ||
                                (action == MutationAction::RemoveEdge && !g.edges().empty()) ||
                                (action == MutationAction::ChangeActivation && !g.hidden_ids().empty()) ||
                                (action == MutationAction::ChangeWeight && !g.edges().empty());
        if (applicable) {
            any_applicable = true;
            break;
        }
    }
    if (!any_applicable) {
        // Degenerate genome: seed it with one fresh input->output edge.
        Genome child = g;
        const int src = static_cast<int>(rng.uniform_index(kCppnInputs));
        const int dst = kCppnInputs + static_cast<int>(rng.uniform_index(kCppnOutputs));
        child.edges_.push_back({src, dst, rng.normal(0.0, 1.0)});
        return child;
    }
    Genome child;
    for (;;) {
        const auto action = static_cast<MutationAction>(rng.uniform_index(kActions));
        if (try_mutation(g, action, rng, child)) return child;
    }
}

Genome random_genome(Rng& rng) {
    Genome g = Genome::minimal(rng.next_u64());
    for (int i = 0; i < kCppnInputs; ++i) {
        for (int o = 0; o < kCppnOutputs; ++o) {
            if (rng.bernoulli(0.5)) g.edges_.push_back({i, kCppnInputs + o, rng.normal(0.0, 1.0)});
        }
    }
    if (g.edges_.empty()) {
        const int src = static_cast<int>(rng.uniform_index(kCppnInputs));
        const int dst = kCppnInputs + static_cast<int>(rng.uniform_index(kCppnOutputs));
        g.edges_.push_back({src, dst, rng.normal(0.0, 1.0)});
    }
    return g;
}

std::string Genome::serialize() const {
    nlohmann::json j;
    j["version"] = 1;
    j["seed"] = seed_;
    auto& jn = j["nodes"] = nlohmann::json::array();
    for (const Node& n : nodes_) {
        nlohmann::json e;
        e["id"] = n.id;
        e["kind"] = n.kind == NodeKind::Input ? "input" : n.kind == NodeKind::Output ? "output" : "hidden";
        if (n.kind == NodeKind::Hidden) e["activation"] = activation_name(n.activation);
        jn.push_back(e);
    }
    auto& je = j["edges"] = nlohmann::json::array();
    for (const Edge& e : edges_) je.push_back({{"src", e.src}, {"dst", e.dst}, {"weight", e.weight}});
    return j.dump();
}

Genome Genome::deserialize(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw GenomeParseError(std::string("genome parse: ") + e.what());
    }
    Genome g;
    try {
        if (j.at("version").get<int>() != 1) throw GenomeParseError("unsupported genome version");
        g.seed_ = j.at("seed").get<std::uint64_t>();
        for (const auto& n : j.at("nodes")) {
            Node node;
            node.id = n.at("id").get<int>();
            const std::string kind = n.at("kind").get<std::string>();
            node.kind = kind == "input"    ? NodeKind::Input
                        : kind == "output" ? NodeKind::Output
                        : kind == "hidden" ? NodeKind::Hidden
                                           : throw GenomeParseError("unknown node kind: " + kind);
            if (node.kind == NodeKind::Hidden)
                node.activation = activation_from_name(n.at("activation").get<std::string>());
            g.nodes_.push_back(node);
        }
        for (const auto& e : j.at("edges")) {
            g.edges_.push_back({e.at("src").get<int>(), e.at("dst").get<int>(), e.at("weight").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw GenomeParseError(std::string("genome parse: ") + e.what());
    }
    g.validate();
    return g;
}

} // namespace evoxel
