#include "probshape/monte_carlo.hpp"

#include <fstream>
#include <iomanip>

namespace probshape {

void write_exit_samples(const ExitSampleSet& exits, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "start_x,start_y,exit_x,exit_y,edge,steps\n" << std::setprecision(17);
  for (const auto& s : exits.samples) {
    const int tag = s.exit.kind == BoundaryLocation::Kind::edge ? s.exit.index : -(s.exit.index + 1);
    out << s.start.x() << ',' << s.start.y() << ',' << s.exit.point.x() << ',' << s.exit.point.y() << ','
        << tag << ',' << s.steps << '\n';
  }
}

}  // namespace probshape
