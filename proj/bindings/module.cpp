#include <pybind11/pybind11.h>

#include "goalgen/parser.hpp"
#include "goalgen/printer.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_goalgen, m) {
  m.doc() = "goal program toolkit";
  m.def("roundtrip", [](const std::string& text) {
    return goalgen::print_game(goalgen::parse_game(text));
  });
}
