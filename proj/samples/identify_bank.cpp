// Identify a 2-channel synthesis bank from its white inputs and output.

#include <cstdio>
#include <random>

#include "smfb/smfb.hpp"

int main() {
  const std::size_t M = 2, N = 4, K = 2000;
  const smfb::FilterBank<double> truth({{-0.0167, 0.0093, -0.9976, -0.6617},
                                        {-0.0179, -0.9833, -0.6267, -0.0616}});

  std::mt19937_64 rng(42);
  std::normal_distribution<double> white;
  std::vector<std::vector<double>> w(M, std::vector<double>(K));
  for (auto& ch : w)
    for (auto& v : ch) v = white(rng);
  const smfb::ChannelInputs<double> inputs(w);

  const auto d = smfb::synthesize(truth, inputs);
  const auto z = smfb::interleave(inputs);

  smfb::LatticeEngine<double> engine({M, N});
  for (std::size_t k = 0; k < K; ++k)
    engine.step(z.samples().subspan(M * k, M), std::span<const double>(d).subspan(M * k, M));

  const auto bank = smfb::deserialize_filters(smfb::extract(engine.snapshot()).filters());
  for (std::size_t i = 0; i < M; ++i) {
    std::printf("f%zu:", i);
    for (double c : bank[i]) std::printf(" %8.4f", c);
    std::printf("\n");
  }
  std::printf("final |e^N| = %.3g, %.3g\n", engine.residuals(N)[0], engine.residuals(N)[1]);
}
