#pragma once

#include <cmath>

#include "sputterlab/errors.hpp"
#include "sputterlab/gp/kernel.hpp"

namespace sputter::gp {

// Affine maps between raw and model units: inputs min-max over the declared
// search box, outputs standardized by the training targets.
template <typename Scalar>
struct Normalization {
    Vector<Scalar> input_lo;
    Vector<Scalar> input_hi;
    Scalar output_mean = 0;
    Scalar output_std = 1;
    bool degenerate_output = false;  // std was zero (or one point); output_std forced to 1

    template <typename Derived>
    Vector<Scalar> normalize_input(const Eigen::MatrixBase<Derived>& raw) const {
        // accepts a row or a column
        Vector<Scalar> v(raw.size());
        for (Eigen::Index i = 0; i < raw.size(); ++i) v(i) = Scalar(raw(i));
        return ((v - input_lo).array() / (input_hi - input_lo).array()).matrix();
    }
    template <typename Derived>
    Vector<Scalar> denormalize_input(const Eigen::MatrixBase<Derived>& unit) const {
        return (input_lo.array() + unit.template cast<Scalar>().array() * (input_hi - input_lo).array()).matrix();
    }
    Matrix<Scalar> normalize_rows(const Matrix<Scalar>& raw) const {
        Matrix<Scalar> out(raw.rows(), raw.cols());
        for (Eigen::Index i = 0; i < raw.rows(); ++i) out.row(i) = normalize_input(raw.row(i)).transpose();
        return out;
    }
    Scalar standardize(Scalar y) const { return (y - output_mean) / output_std; }
    Scalar destandardize(Scalar z) const { return z * output_std + output_mean; }
    Scalar destandardize_variance(Scalar v) const { return v * output_std * output_std; }
};

template <typename Scalar>
class TrainingSet {
public:
    TrainingSet() = default;

    // Normalization derived from the search box and the targets.
    TrainingSet(Matrix<Scalar> raw_inputs, Vector<Scalar> raw_targets, const Vector<Scalar>& box_lo,
                const Vector<Scalar>& box_hi)
        : raw_inputs_(std::move(raw_inputs)), raw_targets_(std::move(raw_targets)) {
        check_shapes();
        if (box_lo.size() != raw_inputs_.cols() || box_hi.size() != raw_inputs_.cols() ||
            !((box_hi - box_lo).array() > Scalar(0)).all()) {
            throw InvalidArgument("search box must have max > min in every dimension");
        }
        norm_.input_lo = box_lo;
        norm_.input_hi = box_hi;
        const Eigen::Index n = raw_targets_.size();
        norm_.output_mean = raw_targets_.mean();
        Scalar var = 0;
        if (n > 1) var = (raw_targets_.array() - norm_.output_mean).square().sum() / Scalar(n - 1);
        using std::sqrt;
        const Scalar sd = sqrt(var);
        if (n < 2 || !(sd > Scalar(1e-12) * (Scalar(1) + std::abs(norm_.output_mean)))) {
            norm_.output_std = 1;
            norm_.degenerate_output = true;
        } else {
            norm_.output_std = sd;
        }
        apply();
    }

    // Explicit normalization, used when appending fantasy points or rebuilding
    // a stored model.
    TrainingSet(Matrix<Scalar> raw_inputs, Vector<Scalar> raw_targets, Normalization<Scalar> norm)
        : raw_inputs_(std::move(raw_inputs)), raw_targets_(std::move(raw_targets)), norm_(std::move(norm)) {
        check_shapes();
        apply();
    }

    Eigen::Index size() const { return raw_targets_.size(); }
    Eigen::Index dims() const { return raw_inputs_.cols(); }

    const Matrix<Scalar>& inputs() const { return inputs_; }   // normalized rows
    const Vector<Scalar>& targets() const { return targets_; }  // standardized
    const Matrix<Scalar>& raw_inputs() const { return raw_inputs_; }
    const Vector<Scalar>& raw_targets() const { return raw_targets_; }
    const Normalization<Scalar>& normalization() const { return norm_; }

    TrainingSet appended(const Vector<Scalar>& raw_x, Scalar raw_y) const {
        Matrix<Scalar> x(raw_inputs_.rows() + 1, raw_inputs_.cols());
        x << raw_inputs_, raw_x.transpose();
        Vector<Scalar> y(raw_targets_.size() + 1);
        y << raw_targets_, raw_y;
        return TrainingSet(std::move(x), std::move(y), norm_);
    }

private:
    void check_shapes() const {
        if (raw_inputs_.rows() < 1 || raw_inputs_.rows() != raw_targets_.size()) {
            throw InvalidArgument("training set needs >= 1 point and matching input/target counts");
        }
        if (!raw_inputs_.allFinite() || !raw_targets_.allFinite()) throw InvalidArgument("non-finite training data");
    }
    void apply() {
        inputs_ = norm_.normalize_rows(raw_inputs_);
        targets_ = (raw_targets_.array() - norm_.output_mean) / norm_.output_std;
    }

    Matrix<Scalar> raw_inputs_;
    Vector<Scalar> raw_targets_;
    Normalization<Scalar> norm_;
    Matrix<Scalar> inputs_;
    Vector<Scalar> targets_;
};

}  // namespace sputter::gp
