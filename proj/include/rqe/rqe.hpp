#pragma once

#include "rqe/common.hpp"
#include "rqe/relation.hpp"
#include "rqe/query.hpp"
#include "rqe/reduction.hpp"
#include "rqe/cq_index.hpp"
#include "rqe/shuffle.hpp"
#include "rqe/union_enum.hpp"
#include "rqe/mcucq.hpp"
#include "rqe/oracle.hpp"
#include "rqe/bench.hpp"
#include "rqe/generate.hpp"
