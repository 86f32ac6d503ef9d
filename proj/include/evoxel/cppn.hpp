#pragma once

#include "evoxel/rng.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evoxel {

struct CyclicGraph : std::runtime_error {
    CyclicGraph() : std::runtime_error("genome graph contains a cycle") {}
};
struct GenomeParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidGenome : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Activation : int {
    Sin = 0,
    Abs = 1,
    Square = 2,
    Sqrt = 3,
    NegSin = 4,
    NegAbs = 5,
    NegSquare = 6,
    NegSqrt = 7,
};
inline constexpr int kActivationCount = 8;

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);
double apply_activation(Activation a, double v);

enum class NodeKind : int { Input = 0, Hidden = 1, Output = 2 };

struct Node {
    int id = 0;
    NodeKind kind = NodeKind::Hidden;
    Activation activation = Activation::Sin; // meaningful for hidden nodes only

    bool operator==(const Node&) const = default;
};

struct Edge {
    int src = 0;
    int dst = 0;
    double weight = 0.0;

    bool operator==(const Edge&) const = default;
};

inline constexpr int kCppnInputs = 3;  // x, y, distance-to-center
inline constexpr int kCppnOutputs = 7; // one score per voxel type

/// The six structural mutation actions, applied with equal probability among
/// the currently applicable ones.
enum class MutationAction : int {
    AddNode = 0,
    RemoveNode = 1,
    AddEdge = 2,
    RemoveEdge = 3,
    ChangeActivation = 4,
    ChangeWeight = 5,
};

/// A compositional pattern producing network: an acyclic graph mapping the
/// three grid coordinates to seven voxel-type scores. Immutable in use;
/// mutation returns a new genome.
class Genome {
public:
    /// 3 inputs (ids 0..2) and 7 outputs (ids 3..9), no hidden nodes, no edges.
    static Genome minimal(std::uint64_t seed = 0);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::uint64_t seed() const { return seed_; }

    std::vector<int> hidden_ids() const;

    /// Evaluates the network. Hidden nodes apply their activation to the
    /// weighted sum of incoming values; outputs pass the sum through.
    std::array<double, kCppnOutputs> evaluate(double x, double y, double d) const;

    /// Checks all structural invariants; throws CyclicGraph or InvalidGenome.
    void validate() const;

    std::string serialize() const;
    static Genome deserialize(const std::string& text);

    bool operator==(const Genome&) const = default;

    friend Genome mutate(const Genome& g, Rng& rng);
    friend bool try_mutation(const Genome& g, MutationAction action, Rng& rng, Genome& out);
    friend Genome random_genome(Rng& rng);

private:
    std::vector<Node> nodes_; // inputs first, then outputs, then hidden
    std::vector<Edge> edges_;
    std::uint64_t seed_ = 0; // lineage tag, carried for provenance

    int node_pos(int id) const; // index into nodes_, -1 if missing
    bool edge_exists(int src, int dst) const;
    bool path_exists(int from, int to) const;
    std::vector<int> topo_order() const; // node ids; throws CyclicGraph
};

/// Returns a mutated copy; the parent is untouched. Exactly one action is
/// applied; inapplicable actions are never selected.
Genome mutate(const Genome& g, Rng& rng);

/// Applies one specific action; returns false (and leaves `out` untouched)
/// when the action is inapplicable. Exposed for tests.
bool try_mutation(const Genome& g, MutationAction action, Rng& rng, Genome& out);

/// Fresh genome: each input->output edge present with probability 0.5
/// (weight ~ Normal(0,1)), at least one edge guaranteed.
Genome random_genome(Rng& rng);

} // namespace evoxel
