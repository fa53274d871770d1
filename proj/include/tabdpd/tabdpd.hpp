#pragma once

#include "tabdpd/error.hpp"
#include "tabdpd/value.hpp"
#include "tabdpd/text.hpp"
#include "tabdpd/table.hpp"
#include "tabdpd/relation.hpp"
#include "tabdpd/world.hpp"
#include "tabdpd/anchor.hpp"
#include "tabdpd/form.hpp"
#include "tabdpd/denotation.hpp"
#include "tabdpd/answer.hpp"
#include "tabdpd/execute.hpp"
#include "tabdpd/rules.hpp"
#include "tabdpd/rng.hpp"
#include "tabdpd/dpd.hpp"
#include "tabdpd/beam.hpp"
#include "tabdpd/invariance.hpp"
#include "tabdpd/io.hpp"
#include "tabdpd/fictitious.hpp"
#include "tabdpd/classes.hpp"
#include "tabdpd/pipeline.hpp"
