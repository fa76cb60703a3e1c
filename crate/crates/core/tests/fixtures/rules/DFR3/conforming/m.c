#include "m.h"
#include "ext.h"

static tS32 state;

static tS32 helper(tS32 x)
{
  return x + 1;
}

void m_init(void)
{
  state = 0;
  ext_init();
}

tS32 m_step(void)
{
  tS32 v = 1;
  tS32 *b = &v;
  state = *b;
  return state;
}
