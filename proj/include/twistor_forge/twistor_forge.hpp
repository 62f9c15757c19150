#pragma once

// Umbrella header: the whole library.

#include "bbf.hpp"
#include "cli.hpp"
#include "errors.hpp"
#include "form.hpp"
#include "fourier_scalar.hpp"
#include "grid.hpp"
#include "hodge.hpp"
#include "json_io.hpp"
#include "kernel.hpp"
#include "linalg.hpp"
#include "multivector.hpp"
#include "parallel.hpp"
#include "perdom.hpp"
#include "positivity.hpp"
#include "random.hpp"
#include "report.hpp"
#include "structure.hpp"
#include "twistor.hpp"
