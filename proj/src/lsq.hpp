#pragma once

#include <Eigen/Dense>
#include <vector>

namespace m3dram::detail {

struct LinearFit {
    Eigen::VectorXd coef;
    Eigen::Index rank = 0;
    double rss = 0;
    std::vector<double> residuals;  // A*coef - b
};

/// Column-pivoted QR least squares. Columns are rescaled to unit max-norm
/// before factoring so polynomial bases in F units stay well conditioned.
inline LinearFit least_squares(Eigen::MatrixXd a, const Eigen::VectorXd& b) {
    Eigen::VectorXd scale(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double m = a.col(j).cwiseAbs().maxCoeff();
        scale(j) = m > 0 ? m : 1.0;
        a.col(j) /= scale(j);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    LinearFit fit;
    fit.rank = qr.rank();
    Eigen::VectorXd x = qr.solve(b);
    const Eigen::VectorXd r = a * x - b;
    fit.rss = r.squaredNorm();
    fit.residuals.assign(r.data(), r.data() + r.size());
    fit.coef = x.cwiseQuotient(scale);
    return fit;
}

}  // namespace m3dram::detail
