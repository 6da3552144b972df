#include <pybind11/pybind11.h>

namespace py = pybind11;

PYBIND11_MODULE(_krp, m) {
    m.doc() = "noise renormalization toolkit bindings";
    m.attr("__version__") = "0.1.0";
}
