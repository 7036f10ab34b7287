// Writes a stochastic-block-model dataset in the on-disk dataset format.

#include "gcsr/error.hpp"
#include "gcsr/graph.hpp"
#include "gcsr/synthetic.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Generate a stochastic block model dataset", "gcsr_make_sbm"};
  gcsr::SbmSpec spec;
  std::string out;
  std::string mode = "transductive";
  app.add_option("--out", out, "output dataset directory")->required();
  app.add_option("--blocks", spec.block_sizes, "block sizes")->capture_default_str();
  app.add_option("--p-in", spec.p_in, "intra-block edge probability")->capture_default_str();
  app.add_option("--p-out", spec.p_out, "inter-block edge probability")->capture_default_str();
  app.add_option("--features", spec.num_features, "feature dimension")->capture_default_str();
  app.add_option("--signal", spec.signal, "norm of each class mean")->capture_default_str();
  app.add_option("--noise", spec.noise, "per-coordinate noise standard deviation")->capture_default_str();
  app.add_option("--train", spec.train_fraction, "training fraction per class")->capture_default_str();
  app.add_option("--val", spec.val_fraction, "validation fraction per class")->capture_default_str();
  app.add_option("--mode", mode, "transductive or inductive")->capture_default_str();
  app.add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    spec.mode = gcsr::parse_mode(mode);
    const gcsr::GraphDataset ds = gcsr::make_sbm(spec);
    gcsr::save_dataset(ds, out);
    std::cout << "wrote " << ds.num_nodes() << " nodes, " << ds.adjacency.nonZeros() / 2 << " edges to " << out << "\n";
  } catch (const gcsr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
