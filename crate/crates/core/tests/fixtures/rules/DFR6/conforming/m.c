#include "m.h"
#include "ext.h"

static tS32 state;

static tS32 helper(tS32 x)
{
  return x + 1;
}

static tS32 ticks;

void m_init(void)
{
  state = 0;
  ext_init();
}

tS32 m_step(void)
{
  state = helper(state) + ext_read();
  return state;
}
