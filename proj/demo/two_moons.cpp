// Kernel vs linear learners on interleaving half-moons.
// Usage: demo_two_moons [seed]

#include <cstdlib>
#include <iostream>

#include "soauc/soauc.hpp"

using namespace soauc;

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 5;
    const auto data = two_moons(1000, seed, 0.1, 0.5, 0.75, 0.75);
    const auto test = two_moons(1000, derive_seed(seed, 1), 0.1, 0.5, 0.75, 0.75);
    std::vector<int> labels;
    for (const auto& z : test) labels.push_back(z.y);

    auto evaluate = [&](Algorithm a, const Hyperparams& h) {
        AlgorithmSettings s;
        s.algorithm = a;
        const auto model = train_one_pass(s, h, data, 2);
        std::vector<double> scores;
        for (const auto& z : test) scores.push_back(model.score(z.x));
        std::cout << to_string(a) << " lambda=" << h.lambda << " eta=" << h.eta << " width=" << h.kernel_width
                  << " test_auc=" << format_double(auc(scores, labels).value) << "\n";
    };
    evaluate(Algorithm::OkaucM, {0.01, 1.0, 0.5, 1.0});
    evaluate(Algorithm::OkaucS, {0.01, 0.1, 0.5, 1.0});
    evaluate(Algorithm::OaucM, {0.01, 1.0, 1.0, 1.0});
    evaluate(Algorithm::OaucS, {0.01, 0.1, 1.0, 1.0});
    evaluate(Algorithm::Perceptron, {1.0, 1.0, 1.0, 1.0});
    return 0;
}
