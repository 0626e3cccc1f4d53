#ifndef XLNER_LSTM_HPP_
#define XLNER_LSTM_HPP_

#include <string>

#include "xlner/rng.hpp"
#include "xlner/tensor.hpp"

namespace xlner {

// One LSTM layer. Parameters: weight [4H x (In + H)] with gate blocks in the
// order input, forget, output, candidate; bias [4H].
//
//   z = W [x_t; h_{t-1}] + b
//   i = sigma(z_i), f = sigma(z_f), o = sigma(z_o), g = tanh(z_g)
//   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
//
// Zero initial state.
class LstmLayer {
 public:
  LstmLayer() = default;
  LstmLayer(ParameterStore& store, const std::string& name, const std::string& group, int input_size,
            int hidden_size);

  int input_size() const { return input_; }
  int hidden_size() const { return hidden_; }
  int weight_id() const { return weight_; }
  int bias_id() const { return bias_; }

  struct Cache {
    Mat x;       // In x T
    Mat gates;   // 4H x T, post-activation
    Mat cell;    // H x T
    Mat tanh_c;  // H x T
    Mat hidden;  // H x T
  };

  // X: In x T. Returns the cache; cache.hidden holds the outputs.
  Cache forward(const ParameterStore& store, const Mat& x) const;

  // d_hidden: H x T gradient w.r.t. every output. Accumulates parameter
  // gradients into `grad` and returns dL/dX (In x T).
  Mat backward(const ParameterStore& store, const Cache& cache, const Mat& d_hidden,
               RealBuffer& grad) const;

  // Glorot-uniform input block, orthogonal recurrent gate blocks, forget
  // bias 1, other biases 0.
  void initialize(ParameterStore& store, SplitMix64& rng) const;

 private:
  int input_ = 0;
  int hidden_ = 0;
  int weight_ = -1;
  int bias_ = -1;
};

}  // namespace xlner

#endif  // XLNER_LSTM_HPP_
