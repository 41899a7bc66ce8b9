#pragma once

#include <map>
#include <optional>
#include <vector>

#include "chainfg/graph.hpp"
#include "chainfg/mat.hpp"

namespace chainfg {

enum class EliminationMode { Serial, Parallel };

/// Parallel-mode lane execution. Results are bit-identical either way; the
/// two sweeps share no mutable state.
enum class ExecPolicy { SingleThread, DualThread };

/// Direction of one elimination step: Forward eliminates x_i against
/// separator x_{i+1}, Backward against x_{i-1}.
enum class Direction { Forward, Backward };

/// Separator factor produced by a partial QR step: the un-eliminated tail
/// rows, attached to the neighbor variable. Rows accumulate as elimination
/// proceeds (the tail is carried forward whole, so its row count grows
/// along the chain).
struct TauFactor {
    int on_index = 0;
    Mat a_block;  // rows x state_dim
    Vec rhs;
};

/// p(x_i | x_parent): R_i delta_i + T delta_parent = d_i.
struct ChainConditional {
    int index = 0;
    Mat r_block;                 // state_dim x state_dim, upper triangular
    Mat t_block;                 // cross term toward parent; empty for the root
    Vec d_block;
    std::optional<int> parent;   // i-1, i+1, or nullopt for the root
};

struct ChainBayesNet {
    std::vector<ChainConditional> conditionals;  // conditionals[i-1] is keyframe i
    int root_index = 0;
    EliminationMode mode = EliminationMode::Serial;

    int n() const { return static_cast<int>(conditionals.size()); }
    int state_dim() const { return conditionals.empty() ? 0 : conditionals.front().r_block.rows; }
};

/// One elimination step: pair members of a parallel stage share a stage
/// number. abar_cols counts value columns (the rhs column is excluded).
struct StepTrace {
    int stage = 0;
    int index = 0;
    int abar_rows = 0;
    int abar_cols = 0;
};

struct EliminationResult {
    ChainBayesNet net;
    /// Keyed by separator index. Serial elimination stores exactly one
    /// factor per key; in parallel mode the root key holds the left- and
    /// right-lane factors, in that order.
    std::map<int, std::vector<TauFactor>> tau_cache;
    std::vector<StepTrace> trace;
};

struct AbarInputs {
    const GpsFactor* gps = nullptr;
    const BetweenFactor* between = nullptr;
    const MotionFactor* motion = nullptr;
    std::vector<const TauFactor*> taus;
};

/// Stack whitened block rows (taus first, then gps, then between, then
/// motion) into the augmented elimination matrix for `index`. Columns are
/// ordered (eliminated variable | separator | rhs); the separator columns
/// exist only when a binary factor is present, and `direction` selects which
/// neighbor the separator is. A binary factor that does not connect `index`
/// to that neighbor is a chain violation.
Mat build_abar(const AbarInputs& inputs, int index, Direction direction, const StateVec& states,
               const StateLayout& layout);

struct EliminationStep {
    ChainConditional cond;
    std::optional<TauFactor> tau;  // absent when the step has no separator
    StepTrace trace;               // stage left 0; callers assign it
};

/// One elimination: build the augmented matrix, run the partial QR, split
/// conditional and separator factor. Throws SingularSystemError naming
/// `index` when the variable is under-constrained.
EliminationStep eliminate_step(const AbarInputs& inputs, int index, Direction direction, const StateVec& states,
                               const StateLayout& layout);

/// Forward sweep x_1 -> x_n; each step runs a partial QR of width state_dim
/// and emits p(x_i | x_{i+1}) plus the separator factor for the next step.
EliminationResult eliminate_serial(const ChainFactorGraph& graph, const StateVec& states);

/// Two-ended sweep: pairs (i, n+1-i) are eliminated concurrently while the
/// frontiers share no factor; once they become adjacent the remaining one or
/// two variables are eliminated sequentially and the last becomes the root
/// (right-middle for even n). The solution matches eliminate_serial.
EliminationResult eliminate_parallel(const ChainFactorGraph& graph, const StateVec& states,
                                     ExecPolicy policy = ExecPolicy::SingleThread);

/// Flat increment vector (keyframe i occupies [(i-1)*d, i*d)).
Vec back_substitute_serial(const ChainBayesNet& net);

/// Root first, then the two outward sweeps (independently, optionally on two
/// threads); equals the serial-mode solution on the same graph.
Vec back_substitute_parallel(const ChainBayesNet& net, ExecPolicy policy = ExecPolicy::SingleThread);

/// Generic solve for any chain-oriented net (used by the incremental tree,
/// whose tip conditional may point backward after a parallel update).
Vec solve_net(const ChainBayesNet& net);

/// Number of structurally present off-diagonal blocks in the stacked R
/// (= non-root conditionals).
int fill_in_count(const ChainBayesNet& net);

}  // namespace chainfg
