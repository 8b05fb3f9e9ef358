#pragma once

#include "h2n/crossratio.hpp"
#include "h2n/plateau.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace h2n {

struct AuditCheck {
    std::string name;
    double value = 0.0;
    std::string relation;  // "<=" or ">="
    double threshold = 0.0;
    bool pass = false;
};

struct AuditReport {
    std::string audit;
    std::vector<AuditCheck> checks;
    std::map<std::string, double> values;
    std::map<std::string, std::vector<double>> series;
    std::vector<std::string> notes;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    bool pass = false;

    void check_le(const std::string& name, double value, double threshold);
    void check_ge(const std::string& name, double value, double threshold);
    // pass = every check passed (and at least one check exists).
    void finalize();
};

nlohmann::json to_json(const AuditReport& r);

// Throws unless the state is converged or analytic.
void require_converged(const SurfaceState& st, const char* audit);

// Interior vertices for audits: rings 0 .. m - 2.
std::vector<int> audited_vertices(const SurfaceState& st);

AuditReport rigidity_audit(const SurfaceState& st);
AuditReport gradient_audit(const SurfaceState& st, std::size_t boundary_samples, std::uint64_t seed);
AuditReport distance_ratio_audit(const SurfaceState& st, std::size_t pairs, std::uint64_t seed);
AuditReport gromov_audit(const SurfaceState& st, std::size_t triples, std::uint64_t seed);
AuditReport asymptotic_hyperbolicity_audit(const SurfaceState& st);
AuditReport hessian_audit(const SurfaceState& st, const Vec& z, std::size_t samples, std::uint64_t seed = 0);

// Shortest paths over mesh vertices plus evenly spaced points on every edge chord, projected to the
// quadric; nodes of a face are pairwise joined and weighted by their spatial distance.
class SurfaceGraph {
public:
    explicit SurfaceGraph(const SurfaceState& st, int steiner = 6);
    // Distances from a mesh vertex to every mesh vertex.
    [[nodiscard]] std::vector<double> distances(int source) const;

private:
    int vertices_;
    std::vector<std::vector<std::pair<int, double>>> adj_;
};

struct FlatteningResult {
    Vec u;                              // log conformal factors
    Mat disk;                           // hyperboloid-model layout, one row (x, y, z) per vertex
    std::vector<double> boundary_angle; // disk argument of each boundary vertex, by sector
    int newton_iterations = 0;
    double residual = 0.0;
};

// Hyperbolic discrete conformal flattening: interior angle sums 2 pi, boundary angle sums kept.
FlatteningResult discrete_flattening(const SurfaceState& st, double tol = 1e-10, int max_iter = 100);

struct BoundaryExtension {
    SampledBoundaryMap map;
    QSCertificate certificate;
    FlatteningResult flattening;
};

BoundaryExtension boundary_extension(const SurfaceState& st, std::size_t rays, double A = 2.0,
                                     std::size_t quadruples = 20000, std::uint64_t seed = 0);
// Passes when the certificate at A = 2 is finite; also records whether the map is a circle map.
AuditReport boundary_extension_audit(const SurfaceState& st, std::size_t rays, std::uint64_t seed);

struct QuasiperiodicityReport {
    double base_margin = 0.0;
    double min_margin = 0.0;
    std::vector<double> margins;
    std::size_t triples = 0;
    std::uint64_t seed = 0;
};

// 1 - max over consecutive samples of d_S^n / d_S^1.
double contraction_margin(const std::vector<double>& theta, const std::vector<Vec>& fibers);
QuasiperiodicityReport quasiperiodicity_probe(const LipschitzLoop& loop, std::size_t triples, std::uint64_t seed);

struct DegenerationReport {
    BarbotCrown crown;
    std::vector<double> hausdorff;  // entry k: distance of g^k(loop) to the crown
    int first_below = -1;           // first k with distance below the threshold
    double threshold = 1e-3;
};

// Crown seeded from the endpoints of the loop's first photon arc.
BarbotCrown seeded_crown(const LipschitzLoop& loop);
// The crown as a graph over S^1: vertices joined by unit-speed fiber geodesics.
LipschitzLoop crown_graph(const BarbotCrown& crown);
// Hausdorff distance between two graphs in the product metric sqrt(d_S1^2 + d_Sn^2).
double graph_hausdorff(const LipschitzLoop& a, const LipschitzLoop& b, std::size_t resolution = 65536);
DegenerationReport barbot_degeneration(const LipschitzLoop& loop, const BarbotCrown& crown, int iters,
                                       std::size_t samples = 8192, double threshold = 1e-3);

}  // namespace h2n
