///
/// \file hnamor.hpp
///
/// Umbrella header.
///

#ifndef HNAMOR_HNAMOR_HPP
#define HNAMOR_HNAMOR_HPP

#include "hnamor/aaa.hpp"
#include "hnamor/core.hpp"
#include "hnamor/diagnostics.hpp"
#include "hnamor/grids.hpp"
#include "hnamor/hna.hpp"
#include "hnamor/io.hpp"
#include "hnamor/lti.hpp"
#include "hnamor/pipeline.hpp"
#include "hnamor/sampling.hpp"
#include "hnamor/stabilize.hpp"

#endif // HNAMOR_HNAMOR_HPP
