#include <lapnet/nn.hpp>

#include <cmath>

namespace lapnet::nn {

void adam_step(Parameter& param, const AdamOptions& options)
{
    if (param.grad.size() == 0) {
        param.grad = Tensor::Zero(param.value.rows(), param.value.cols());
    }
    ++param.step;
    const double t = static_cast<double>(param.step);
    const double correction1 = 1.0 - std::pow(options.beta1, t);
    const double correction2 = 1.0 - std::pow(options.beta2, t);

    param.m = options.beta1 * param.m + (1.0 - options.beta1) * param.grad;
    param.v = options.beta2 * param.v + (1.0 - options.beta2) * param.grad.cwiseAbs2();
    const auto m_hat = param.m.array() / correction1;
    const auto v_hat = param.v.array() / correction2;
    param.value.array() -= options.learning_rate * m_hat / (v_hat.sqrt() + options.epsilon);
    param.zero_grad();
}

} // namespace lapnet::nn
