#ifndef MYOSHAPE_GRADCHECK_HPP
#define MYOSHAPE_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace myoshape::gradcheck {

struct Row {
    std::string term;
    std::string param_block;
    double max_rel_err = 0.0;
};

/// Central-difference verification (step 1e-5) of every analytic gradient:
/// L_b, L_phi, L_p, soft Dice, L_D, L_Cc over all parameter blocks and
/// dL_Co/dD. Error is reported relative to the infinity norm of the block.
std::vector<Row> run(std::uint64_t seed, int n_configs = 20);

bool all_pass(const std::vector<Row>& rows, double tol = 1e-4);

std::string to_csv(const std::vector<Row>& rows);

}  // namespace myoshape::gradcheck

#endif  // MYOSHAPE_GRADCHECK_HPP
