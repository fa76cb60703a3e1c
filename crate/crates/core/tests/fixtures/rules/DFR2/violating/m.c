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
  tS32 arr[2] = {1, 2};
  tS32 *p = arr;
  state = *(p + 1);
  return state;
}
